#pragma once

#include <functional>
#include <utility>

#include "fgbfi/integrate.hpp"

namespace fgbfi {

/// Benettin-loop configuration. tau_M is the re-orthonormalization interval;
/// the effective horizon is fixed to M * tau_M in working precision at
/// construction so tau_M * M == T holds exactly.
struct BenettinConfig {
  PrecisionContext ctx;
  long M;
  Real tau_M;
  Real T;  ///< M * tau_M, recomputed once in working precision
  unsigned long seed = 1;
  Real eps_pw;
  Real delta;
  int max_degree = 1000;
  int threads = 0;        ///< per-macro-step perturbation parallelism; 1 = serial reference
  bool keep_trace = true; ///< record running estimates after every macro-step

  /// Observer fired after each Gram-Schmidt sweep with the macro-step index,
  /// the orthonormalized perturbations, and the accumulated log sums.
  std::function<void(long, const std::vector<RVec>&, const RVec&)> on_macro_step;

  BenettinConfig(const PrecisionContext& c, const Real& horizon, long steps, unsigned long rng_seed,
                 const Real& eps, const Real& del);
};

/// n pairwise-orthonormal start perturbations, deterministic in the seed.
std::vector<RVec> init_perturbations(long n, unsigned long seed, const PrecisionContext& ctx);

/// Propagate (Y, Z_p) through the extended system over one macro-step and
/// split the endpoint back into blocks. ext must be extend_variational of
/// the base system. The step schedule is driven by the Y block plus the
/// fixed perturbation allowance, so Y' is bit-identical for every Z_p.
std::pair<RVec, RVec> propagate_pair(const QuadSystem& ext, const RVec& y, const RVec& z,
                                     const Real& tau_M, const IntegrationConfig& cfg);

/// One orthonormalization sweep in index order: for each p the residual
/// S = Z_p - sum_{i<p} <Z_p, Z_i> Z_i is logged into sums[p] and Z_p is
/// replaced by S/|S|. Throws DegeneracyError if |S| falls below
/// 1e6 * eps_m.
void gram_schmidt_step(std::vector<RVec>& z, RVec& sums);

/// Full spectrum estimate.
struct SpectrumResult {
  RVec exponents;                ///< production order p = 1..n
  std::vector<size_t> desc_order;  ///< indices sorted by exponent, descending
  struct TraceRow {
    long k;
    Real t;
    RVec le_running;
  };
  std::vector<TraceRow> trace;
  unsigned long seed = 0;
  long macro_steps = 0;
};

/// Modified Benettin algorithm over the automatically built extended system:
/// per macro-step, each perturbation propagates through the 2n-dimensional
/// system paired with the same base state; a Gram-Schmidt sweep
/// re-orthonormalizes and accumulates log-norms; exponents are the sums over
/// M * tau_M. The n propagations of a macro-step run in parallel when
/// cfg.threads != 1, with results identical to the serial path.
SpectrumResult lyapunov_spectrum(const QuadSystem& sys, const RVec& x_star,
                                 const BenettinConfig& cfg);

}  // namespace fgbfi
