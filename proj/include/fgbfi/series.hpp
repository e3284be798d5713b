#pragma once

#include <span>

#include "fgbfi/qsystem.hpp"

namespace fgbfi {

/// Truncated local Taylor expansion: coefficients Y_0..Y_m of one step.
struct SeriesState {
  std::vector<RVec> coeffs;
  int degree = 0;  ///< m, the local polynomial degree n_l
};

/// i-th Cauchy-product coefficient of the quadratic part:
/// psi_{i,p} = sum_{j=0..i} <Q_p Y_j, Y_{i-j}>.
RVec convolution_term(const QuadSystem& sys, std::span<const RVec> coeffs, long i);

/// Coefficient recurrence Y_j = (A Y_{j-1} + Psi_{j-1}) / j, with j = prior.size().
RVec next_coefficient(const QuadSystem& sys, std::span<const RVec> prior);

/// Expand about x0 for a signed step dt, stopping at the first degree i with
/// |Y_i|_1 * |dt|^i < eps_pw. Throws TruncationFailure past max_degree.
SeriesState truncate(const QuadSystem& sys, const RVec& x0, const Real& dt, const Real& eps_pw,
                     int max_degree = 1000);

/// Horner evaluation (highest degree first) of the local polynomial at offset t.
RVec eval_poly(const SeriesState& state, const Real& t);

/// Reusable expansion workspace. Storage grows lazily with the observed
/// degree and is reused across expand() calls, so steady-state stepping does
/// not allocate.
///
/// With tail_split > 0 the tail criterion latches per block: the expansion
/// runs until both the first tail_split coordinates and the rest have seen a
/// degree whose tail term drops below eps_pw, and eval() uses each block's
/// own stopping degree. The leading block's result is then independent of
/// the trailing block.
class SeriesEngine {
 public:
  explicit SeriesEngine(const QuadSystem& sys, int max_degree = 1000, long tail_split = 0);

  /// Returns the truncation degree n_l (the largest block degree).
  /// Coefficients stay valid until the next expand().
  int expand(const RVec& x0, const Real& dt, const Real& eps_pw);

  int degree() const { return degree_; }
  /// Stopping degree of the leading block (== degree() when not split).
  int lead_degree() const { return degree_lo_; }
  std::span<const RVec> coeffs() const {
    return {ups_.data(), static_cast<size_t>(degree_) + 1};
  }
  void eval(const Real& t, RVec& out) const;

  const QuadSystem& system() const { return *sys_; }

 private:
  void ensure_rows(long j);

  const QuadSystem* sys_;
  PrecisionContext ctx_;
  int max_degree_;
  long tail_split_;
  int degree_ = -1;
  int degree_lo_ = -1;
  std::vector<RVec> ups_;
  Real acc_, pw_, tail_, tail_hi_, prod_, absdt_;
};

}  // namespace fgbfi
