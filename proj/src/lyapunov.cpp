#include "fgbfi/lyapunov.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fgbfi/parallel.hpp"

namespace fgbfi {

BenettinConfig::BenettinConfig(const PrecisionContext& c, const Real& horizon, long steps,
                               unsigned long rng_seed, const Real& eps, const Real& del)
    : ctx(c), M(steps), tau_M(c), T(c), seed(rng_seed), eps_pw(eps), delta(del) {
  if (M < 1) throw std::invalid_argument("M must be at least 1");
  if (!(horizon > Real::zero(c))) throw std::invalid_argument("horizon T must be positive");
  mpfr_div_ui(tau_M.raw(), horizon.raw(), static_cast<unsigned long>(M), MPFR_RNDN);
  // Fix the effective horizon so tau_M * M == T holds exactly as stored.
  mpfr_mul_ui(T.raw(), tau_M.raw(), static_cast<unsigned long>(M), MPFR_RNDN);
}

std::vector<RVec> init_perturbations(long n, unsigned long seed, const PrecisionContext& ctx) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  Real floor = Real::of(1000000, ctx) * ctx.machine_epsilon();

  for (int attempt = 0; attempt < 2; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<unsigned long>(attempt) * 0x9e3779b97f4a7c15ULL);
    std::vector<RVec> z;
    z.reserve(static_cast<size_t>(n));
    for (long p = 0; p < n; ++p) {
      RVec v = make_vec(n, ctx);
      for (long i = 0; i < n; ++i) {
        double u = static_cast<double>(rng() >> 11) / 9007199254740992.0;  // [0,1)
        mpfr_set_d(v[i].raw(), u, MPFR_RNDN);
      }
      z.push_back(std::move(v));
    }
    bool ok = true;
    for (long p = 0; p < n && ok; ++p) {
      RVec s = z[static_cast<size_t>(p)];
      for (long i = 0; i < p; ++i) {
        Real c = dot(z[static_cast<size_t>(p)], z[static_cast<size_t>(i)]);
        for (long q = 0; q < n; ++q) s[static_cast<size_t>(q)] -= c * z[static_cast<size_t>(i)][static_cast<size_t>(q)];
      }
      Real nrm = norm2(s);
      if (nrm < floor) {
        ok = false;  // rank-deficient draw, reseed once
        break;
      }
      for (long q = 0; q < n; ++q)
        z[static_cast<size_t>(p)][static_cast<size_t>(q)] = s[static_cast<size_t>(q)] / nrm;
    }
    if (ok) return z;
  }
  throw DegeneracyError("random perturbations are rank deficient after reseed");
}

namespace {

// Extended-system propagation settings: the step schedule reads the base
// block plus a fixed allowance so it stays independent of the perturbation;
// the ball guards the base block only.
IntegrationConfig extended_config(const QuadSystem& ext, const Real& tau_M,
                                  const IntegrationConfig& base) {
  long n = ext.dim() / 2;
  IntegrationConfig icfg(base.ctx, base.eps_pw, base.delta, tau_M, +1);
  icfg.max_degree = base.max_degree;
  icfg.ball_dims = n;
  icfg.sched_dims = n;
  icfg.sched_pad_norm2 = Real::of(2, base.ctx);
  icfg.sched_pad = icfg.sched_pad_norm2 * sqrt(Real::of(n, base.ctx));
  icfg.tail_split = n;
  return icfg;
}

void run_extended(const QuadSystem& ext, const IntegrationConfig& icfg, const RVec& stacked,
                  RVec& y_out, RVec& z_out) {
  ArcCursor cur(ext, icfg, stacked);
  while (cur.advance()) {
  }
  if (cur.escaped())
    throw BallEscapeError(std::string("extended trajectory left the trapping ball. ") +
                          kBallEscapeAdvice);
  const RVec& end = cur.state();
  long n = ext.dim() / 2;
  for (long i = 0; i < n; ++i) {
    mpfr_set(y_out[i].raw(), end[i].raw(), MPFR_RNDN);
    mpfr_set(z_out[i].raw(), end[n + i].raw(), MPFR_RNDN);
  }
}

}  // namespace

std::pair<RVec, RVec> propagate_pair(const QuadSystem& ext, const RVec& y, const RVec& z,
                                     const Real& tau_M, const IntegrationConfig& cfg) {
  long n = ext.dim() / 2;
  if (ext.dim() % 2 != 0 || static_cast<long>(y.size()) != n || static_cast<long>(z.size()) != n)
    throw std::invalid_argument("propagate_pair: block dimensions do not match the extension");
  IntegrationConfig icfg = extended_config(ext, tau_M, cfg);
  RVec stacked = y;
  for (const Real& zi : z) stacked.push_back(zi);
  RVec y_out = make_vec(n, cfg.ctx);
  RVec z_out = make_vec(n, cfg.ctx);
  run_extended(ext, icfg, stacked, y_out, z_out);
  return {std::move(y_out), std::move(z_out)};
}

void gram_schmidt_step(std::vector<RVec>& z, RVec& sums) {
  if (z.empty()) throw std::invalid_argument("gram_schmidt_step: empty set");
  const long n = static_cast<long>(z.size());
  const long dim = static_cast<long>(z[0].size());
  if (static_cast<long>(sums.size()) != n)
    throw std::invalid_argument("gram_schmidt_step: sums size mismatch");
  PrecisionContext ctx(z[0][0].precision());
  Real floor = Real::of(1000000, ctx) * ctx.machine_epsilon();

  RVec s = make_vec(dim, ctx);
  Real c(ctx), t(ctx), nrm(ctx);
  for (long p = 0; p < n; ++p) {
    copy_into(s, z[static_cast<size_t>(p)]);
    for (long i = 0; i < p; ++i) {
      // projection coefficient <Z_p, Z_i> against the original Z_p
      mpfr_set_zero(c.raw(), +1);
      for (long q = 0; q < dim; ++q) {
        mpfr_mul(t.raw(), z[static_cast<size_t>(p)][static_cast<size_t>(q)].raw(),
                 z[static_cast<size_t>(i)][static_cast<size_t>(q)].raw(), MPFR_RNDN);
        mpfr_add(c.raw(), c.raw(), t.raw(), MPFR_RNDN);
      }
      for (long q = 0; q < dim; ++q) {
        mpfr_mul(t.raw(), c.raw(), z[static_cast<size_t>(i)][static_cast<size_t>(q)].raw(),
                 MPFR_RNDN);
        mpfr_sub(s[static_cast<size_t>(q)].raw(), s[static_cast<size_t>(q)].raw(), t.raw(),
                 MPFR_RNDN);
      }
    }
    mpfr_set_zero(nrm.raw(), +1);
    for (long q = 0; q < dim; ++q) {
      mpfr_mul(t.raw(), s[static_cast<size_t>(q)].raw(), s[static_cast<size_t>(q)].raw(),
               MPFR_RNDN);
      mpfr_add(nrm.raw(), nrm.raw(), t.raw(), MPFR_RNDN);
    }
    mpfr_sqrt(nrm.raw(), nrm.raw(), MPFR_RNDN);
    if (nrm < floor)
      throw DegeneracyError(
          "Gram-Schmidt residual collapsed to the noise floor; raise b_m or decrease tau_M");
    mpfr_log(t.raw(), nrm.raw(), MPFR_RNDN);
    mpfr_add(sums[static_cast<size_t>(p)].raw(), sums[static_cast<size_t>(p)].raw(), t.raw(),
             MPFR_RNDN);
    for (long q = 0; q < dim; ++q)
      mpfr_div(z[static_cast<size_t>(p)][static_cast<size_t>(q)].raw(),
               s[static_cast<size_t>(q)].raw(), nrm.raw(), MPFR_RNDN);
  }
}

SpectrumResult lyapunov_spectrum(const QuadSystem& sys, const RVec& x_star,
                                 const BenettinConfig& cfg) {
  const long n = sys.dim();
  const PrecisionContext& ctx = cfg.ctx;
  if (static_cast<long>(x_star.size()) != n)
    throw std::invalid_argument("x_star dimension mismatch");

  QuadSystem ext = extend_variational(sys);
  IntegrationConfig base(ctx, cfg.eps_pw, cfg.delta, cfg.tau_M, +1);
  base.max_degree = cfg.max_degree;
  IntegrationConfig icfg = extended_config(ext, cfg.tau_M, base);
  icfg.validate();

  SpectrumResult res;
  res.seed = cfg.seed;
  res.macro_steps = cfg.M;

  RVec y = x_star;
  std::vector<RVec> z = init_perturbations(n, cfg.seed, ctx);
  RVec sums = make_vec(n, ctx);

  std::vector<RVec> stacked, y_next, z_next;
  for (long p = 0; p < n; ++p) {
    stacked.push_back(make_vec(2 * n, ctx));
    y_next.push_back(make_vec(n, ctx));
    z_next.push_back(make_vec(n, ctx));
  }
  const int nthreads = static_cast<int>(std::min<long>(par::resolve(cfg.threads), n));
  if (cfg.keep_trace) res.trace.reserve(static_cast<size_t>(cfg.M));
  Real tk(ctx);

  for (long k = 1; k <= cfg.M; ++k) {
    for (long p = 0; p < n; ++p)
      for (long i = 0; i < n; ++i) {
        mpfr_set(stacked[p][i].raw(), y[i].raw(), MPFR_RNDN);
        mpfr_set(stacked[p][n + i].raw(), z[static_cast<size_t>(p)][i].raw(), MPFR_RNDN);
      }

    std::exception_ptr err;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1)
#endif
    for (long p = 0; p < n; ++p) {
      try {
        run_extended(ext, icfg, stacked[p], y_next[p], z_next[p]);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!err) err = std::current_exception();
        }
      }
    }
    if (err) {
      try {
        std::rethrow_exception(err);
      } catch (const BallEscapeError& e) {
        throw BallEscapeError("macro-step " + std::to_string(k) + ": " + e.what());
      } catch (const TruncationFailure& e) {
        throw TruncationFailure("macro-step " + std::to_string(k) + ": " + e.what());
      } catch (const DegeneracyError& e) {
        throw DegeneracyError("macro-step " + std::to_string(k) + ": " + e.what());
      }
    }

    // The schedule reads only the base block, so every propagation must
    // reproduce the same base state bit for bit.
    for (long p = 1; p < n; ++p)
      for (long i = 0; i < n; ++i)
        if (!(y_next[p][i] == y_next[0][i]))
          throw std::logic_error(
              "base-state propagation diverged across perturbations at macro-step " +
              std::to_string(k));

    copy_into(y, y_next[0]);
    for (long p = 0; p < n; ++p) copy_into(z[static_cast<size_t>(p)], z_next[p]);

    try {
      gram_schmidt_step(z, sums);
    } catch (const DegeneracyError& e) {
      throw DegeneracyError("macro-step " + std::to_string(k) + ": " + e.what());
    }
    if (cfg.on_macro_step) cfg.on_macro_step(k, z, sums);

    if (cfg.keep_trace) {
      mpfr_mul_ui(tk.raw(), cfg.tau_M.raw(), static_cast<unsigned long>(k), MPFR_RNDN);
      SpectrumResult::TraceRow row{k, tk, make_vec(n, ctx)};
      for (long p = 0; p < n; ++p)
        mpfr_div(row.le_running[p].raw(), sums[p].raw(), tk.raw(), MPFR_RNDN);
      res.trace.push_back(std::move(row));
    }
  }

  mpfr_mul_ui(tk.raw(), cfg.tau_M.raw(), static_cast<unsigned long>(cfg.M), MPFR_RNDN);
  res.exponents = make_vec(n, ctx);
  for (long p = 0; p < n; ++p)
    mpfr_div(res.exponents[p].raw(), sums[p].raw(), tk.raw(), MPFR_RNDN);

  res.desc_order.resize(static_cast<size_t>(n));
  std::iota(res.desc_order.begin(), res.desc_order.end(), size_t{0});
  std::sort(res.desc_order.begin(), res.desc_order.end(), [&](size_t a, size_t b) {
    if (res.exponents[a] == res.exponents[b]) return a < b;
    return res.exponents[a] > res.exponents[b];
  });
  return res;
}

}  // namespace fgbfi
