#include "fgbfi/series.hpp"

#include <stdexcept>
#include <string>

namespace fgbfi {

namespace {

// Canonical accumulation order for Psi, shared by the engine and the public
// recurrence ops so both routes agree bit for bit: per component p, per
// nonzero (r,c,v) of Q_p, convolution index i ascending. A +1/-1 coefficient
// skips its (exact) multiply, which cannot change the rounded result.
void add_convolution(const QuadSystem& sys, std::span<const RVec> coeffs, long i, RVec& out,
                     Real& scratch) {
  const RVec* rows = coeffs.data();
  mpfr_ptr s = scratch.raw();
  for (long p = 0; p < sys.dim(); ++p) {
    mpfr_ptr acc = out[p].raw();
    for (const SparseEntry& e : sys.q_entries()[p]) {
      const long c = e.col, r = e.row;
      if (e.unit > 0) {
        for (long a = 0; a <= i; ++a) {
          mpfr_mul(s, rows[a][c].raw(), rows[i - a][r].raw(), MPFR_RNDN);
          mpfr_add(acc, acc, s, MPFR_RNDN);
        }
      } else if (e.unit < 0) {
        for (long a = 0; a <= i; ++a) {
          mpfr_mul(s, rows[a][c].raw(), rows[i - a][r].raw(), MPFR_RNDN);
          mpfr_sub(acc, acc, s, MPFR_RNDN);
        }
      } else {
        mpfr_srcptr v = e.value.raw();
        for (long a = 0; a <= i; ++a) {
          mpfr_mul(s, rows[a][c].raw(), rows[i - a][r].raw(), MPFR_RNDN);
          mpfr_mul(s, s, v, MPFR_RNDN);
          mpfr_add(acc, acc, s, MPFR_RNDN);
        }
      }
    }
  }
}

void add_linear(const QuadSystem& sys, const RVec& x, RVec& out, Real& scratch) {
  mpfr_ptr s = scratch.raw();
  for (const SparseEntry& e : sys.a_entries()) {
    mpfr_ptr acc = out[e.row].raw();
    if (e.unit > 0) {
      mpfr_add(acc, acc, x[e.col].raw(), MPFR_RNDN);
    } else if (e.unit < 0) {
      mpfr_sub(acc, acc, x[e.col].raw(), MPFR_RNDN);
    } else {
      mpfr_mul(s, e.value.raw(), x[e.col].raw(), MPFR_RNDN);
      mpfr_add(acc, acc, s, MPFR_RNDN);
    }
  }
}

}  // namespace

RVec convolution_term(const QuadSystem& sys, std::span<const RVec> coeffs, long i) {
  if (i < 0 || i >= static_cast<long>(coeffs.size()))
    throw std::invalid_argument("convolution_term: index out of range");
  PrecisionContext ctx(sys.precision());
  RVec psi = make_vec(sys.dim(), ctx);
  Real scratch(ctx);
  add_convolution(sys, coeffs, i, psi, scratch);
  return psi;
}

RVec next_coefficient(const QuadSystem& sys, std::span<const RVec> prior) {
  if (prior.empty()) throw std::invalid_argument("next_coefficient: Y_0 required");
  PrecisionContext ctx(sys.precision());
  long j = static_cast<long>(prior.size());
  RVec out = make_vec(sys.dim(), ctx);
  Real scratch(ctx);
  add_linear(sys, prior[j - 1], out, scratch);
  add_convolution(sys, prior, j - 1, out, scratch);
  for (long c = 0; c < sys.dim(); ++c)
    mpfr_div_ui(out[c].raw(), out[c].raw(), static_cast<unsigned long>(j), MPFR_RNDN);
  return out;
}

SeriesEngine::SeriesEngine(const QuadSystem& sys, int max_degree, long tail_split)
    : sys_(&sys),
      ctx_(sys.precision()),
      max_degree_(max_degree),
      tail_split_(tail_split),
      acc_(ctx_),
      pw_(ctx_),
      tail_(ctx_),
      tail_hi_(ctx_),
      prod_(ctx_),
      absdt_(ctx_) {
  if (max_degree < 1) throw std::invalid_argument("max_degree must be at least 1");
  if (tail_split != 0 && (tail_split < 1 || tail_split >= sys.dim()))
    throw std::invalid_argument("tail_split out of range");
}

void SeriesEngine::ensure_rows(long j) {
  while (static_cast<long>(ups_.size()) <= j) ups_.push_back(make_vec(sys_->dim(), ctx_));
}

int SeriesEngine::expand(const RVec& x0, const Real& dt, const Real& eps_pw) {
  const long n = sys_->dim();
  if (static_cast<long>(x0.size()) != n)
    throw std::invalid_argument("expand: x0 dimension mismatch");
  const long split = tail_split_ > 0 ? tail_split_ : n;

  ensure_rows(0);
  for (long c = 0; c < n; ++c) mpfr_set(ups_[0][c].raw(), x0[c].raw(), MPFR_RNDN);
  mpfr_abs(absdt_.raw(), dt.raw(), MPFR_RNDN);
  mpfr_set_ui(pw_.raw(), 1, MPFR_RNDN);
  degree_lo_ = -1;
  int degree_hi = tail_split_ > 0 ? -1 : 0;  // no trailing block when not split

  for (long j = 1;; ++j) {
    if (j > max_degree_) {
      degree_ = -1;
      throw TruncationFailure(
          "series tail still above eps_pw at degree " + std::to_string(max_degree_) +
          "; decrease the step dt or increase eps_pw");
    }
    ensure_rows(j);
    RVec& uj = ups_[static_cast<size_t>(j)];
    const RVec& up = ups_[static_cast<size_t>(j - 1)];
    for (long c = 0; c < n; ++c) mpfr_set_zero(uj[c].raw(), +1);

    add_linear(*sys_, up, uj, acc_);
    add_convolution(*sys_, {ups_.data(), static_cast<size_t>(j)}, j - 1, uj, acc_);

    // Divide by j and accumulate the per-block tail norms in one pass.
    mpfr_set_zero(tail_.raw(), +1);
    mpfr_set_zero(tail_hi_.raw(), +1);
    for (long c = 0; c < n; ++c) {
      mpfr_div_ui(uj[c].raw(), uj[c].raw(), static_cast<unsigned long>(j), MPFR_RNDN);
      mpfr_ptr acc = c < split ? tail_.raw() : tail_hi_.raw();
      if (mpfr_sgn(uj[c].raw()) >= 0)
        mpfr_add(acc, acc, uj[c].raw(), MPFR_RNDN);
      else
        mpfr_sub(acc, acc, uj[c].raw(), MPFR_RNDN);
    }

    // Tail criterion |Y_j|_1 * |dt|^j < eps_pw, latched per block at the
    // first degree that satisfies it.
    mpfr_mul(pw_.raw(), pw_.raw(), absdt_.raw(), MPFR_RNDN);
    if (degree_lo_ < 0) {
      mpfr_mul(prod_.raw(), tail_.raw(), pw_.raw(), MPFR_RNDN);
      if (mpfr_cmp(prod_.raw(), eps_pw.raw()) < 0) degree_lo_ = static_cast<int>(j);
    }
    if (degree_hi < 0) {
      mpfr_mul(prod_.raw(), tail_hi_.raw(), pw_.raw(), MPFR_RNDN);
      if (mpfr_cmp(prod_.raw(), eps_pw.raw()) < 0) degree_hi = static_cast<int>(j);
    }
    if (degree_lo_ >= 0 && degree_hi >= 0) {
      degree_ = static_cast<int>(j);
      return degree_;
    }
  }
}

void SeriesEngine::eval(const Real& t, RVec& out) const {
  if (degree_ < 0) throw std::logic_error("eval before expand");
  const long n = sys_->dim();
  if (static_cast<long>(out.size()) != n) throw std::invalid_argument("eval: out dimension");
  const long split = tail_split_ > 0 ? tail_split_ : 0;
  for (long c = 0; c < n; ++c) {
    const int deg = (split > 0 && c < split) ? degree_lo_ : degree_;
    mpfr_set(out[c].raw(), ups_[static_cast<size_t>(deg)][c].raw(), MPFR_RNDN);
    for (long i = deg - 1; i >= 0; --i) {
      mpfr_mul(out[c].raw(), out[c].raw(), t.raw(), MPFR_RNDN);
      mpfr_add(out[c].raw(), out[c].raw(), ups_[static_cast<size_t>(i)][c].raw(), MPFR_RNDN);
    }
  }
}

SeriesState truncate(const QuadSystem& sys, const RVec& x0, const Real& dt, const Real& eps_pw,
                     int max_degree) {
  SeriesEngine engine(sys, max_degree);
  int m = engine.expand(x0, dt, eps_pw);
  SeriesState st;
  st.degree = m;
  st.coeffs.reserve(static_cast<size_t>(m) + 1);
  for (const RVec& row : engine.coeffs()) st.coeffs.push_back(row);
  return st;
}

RVec eval_poly(const SeriesState& state, const Real& t) {
  if (state.coeffs.empty()) throw std::invalid_argument("eval_poly: empty state");
  const long n = static_cast<long>(state.coeffs[0].size());
  PrecisionContext ctx(state.coeffs[0][0].precision());
  RVec out = make_vec(n, ctx);
  for (long c = 0; c < n; ++c) {
    mpfr_set(out[c].raw(), state.coeffs[static_cast<size_t>(state.degree)][c].raw(), MPFR_RNDN);
    for (long i = state.degree - 1; i >= 0; --i) {
      mpfr_mul(out[c].raw(), out[c].raw(), t.raw(), MPFR_RNDN);
      mpfr_add(out[c].raw(), out[c].raw(), state.coeffs[static_cast<size_t>(i)][c].raw(),
               MPFR_RNDN);
    }
  }
  return out;
}

}  // namespace fgbfi
