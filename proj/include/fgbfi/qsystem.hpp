#pragma once

#include <map>
#include <string>
#include <vector>

#include "fgbfi/linalg.hpp"

namespace fgbfi {

/// Compact ball every trajectory is expected to stay in once on the
/// attractor; leaving it is a diagnostic, not a hard failure.
struct TrappingBall {
  RVec center;
  Real radius;

  /// Euclidean membership test over the first dims coordinates (dims <= 0
  /// means all), boundary inclusive.
  bool contains(const RVec& x, long dims = 0) const;
};

/// One nonzero coefficient of a quadratic form or of the linear matrix.
/// unit caches whether value is exactly +1/-1 so kernels can skip the
/// coefficient multiply (the skipped multiply is exact, results are
/// bit-identical either way).
struct SparseEntry {
  long row, col;
  Real value;
  int unit = 0;  ///< +1, -1, or 0 for a generic coefficient
};

/// Autonomous system X' = A X + Phi(X), Phi_p(X) = <Q_p X, X>.
///
/// Matrices are stored dense (serialization, norms) and mirrored as nonzero
/// triples for the series kernels. norm_a (induced 1-norm of A) and mu
/// (n * max_p |Q_p|_1) are cached at construction.
class QuadSystem {
 public:
  QuadSystem(long n, RMat A, std::vector<RMat> Q, TrappingBall ball, std::string name = {},
             std::map<std::string, std::string> params = {});

  long dim() const { return n_; }
  const RMat& A() const { return A_; }
  const std::vector<RMat>& Q() const { return Q_; }
  const TrappingBall& ball() const { return ball_; }
  const std::string& name() const { return name_; }
  const std::map<std::string, std::string>& params() const { return params_; }

  const std::vector<SparseEntry>& a_entries() const { return a_nnz_; }
  const std::vector<std::vector<SparseEntry>>& q_entries() const { return q_nnz_; }

  const Real& norm_a() const { return norm_a_; }
  const Real& mu() const { return mu_; }

  mpfr_prec_t precision() const { return norm_a_.precision(); }

 private:
  long n_;
  RMat A_;
  std::vector<RMat> Q_;
  TrappingBall ball_;
  std::string name_;
  std::map<std::string, std::string> params_;

  std::vector<SparseEntry> a_nnz_;
  std::vector<std::vector<SparseEntry>> q_nnz_;
  Real norm_a_;
  Real mu_;
};

/// Norm data of the convergence theorem for one expansion point.
struct ConvergenceBounds {
  Real norm_a;  ///< |A|_1, maximum absolute column sum
  Real mu;      ///< n * max_p |Q_p|_1
  Real h1;      ///< |x0|_1
  Real h2;      ///< mu*h1^2 + (|A|+2mu)*h1 if h1 > 1, else |A|+mu
  Real delta;
  Real tau;     ///< 1 / (h2 + delta), certified series convergence step
};

/// Evaluate the theorem bounds at x0; delta must be positive.
ConvergenceBounds compute_bounds(const QuadSystem& sys, const RVec& x0, const Real& delta);

/// A x + Phi(x).
RVec eval_rhs(const QuadSystem& sys, const RVec& x);

/// Build the 2n-dimensional state+perturbation system: block-diagonal linear
/// part, Q_l embedded upper-left for l <= n, and for l = n+p the bilinear
/// coupling q^(p)_{i,j-n} + q^(p)_{j-n,i} in the upper-right block. The ball
/// center is zero-padded and the radius grows by the unit-perturbation
/// allowance 2.
QuadSystem extend_variational(const QuadSystem& sys);

/// Read a system-definition JSON file (all numerics decimal strings,
/// integers permitted where exact) at ctx precision.
QuadSystem load_system(const std::string& path, const PrecisionContext& ctx);

/// Write the system-definition JSON; values round-trip bit-exactly through
/// load_system at the same precision.
void save_system(const QuadSystem& sys, const std::string& path);

}  // namespace fgbfi
