#include "fgbfi/linalg.hpp"

#include <stdexcept>

namespace fgbfi {

RVec make_vec(long n, const PrecisionContext& ctx) {
  RVec v;
  v.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) v.push_back(Real::zero(ctx));
  return v;
}

RVec parse_vec(const std::vector<std::string>& items, const PrecisionContext& ctx) {
  RVec v;
  v.reserve(items.size());
  for (const auto& s : items) v.push_back(parse_decimal(s, ctx));
  return v;
}

Real norm1(const RVec& x) {
  Real s(x.at(0).precision());
  mpfr_set_zero(s.raw(), +1);
  for (const Real& xi : x) {
    if (mpfr_sgn(xi.raw()) >= 0)
      mpfr_add(s.raw(), s.raw(), xi.raw(), MPFR_RNDN);
    else
      mpfr_sub(s.raw(), s.raw(), xi.raw(), MPFR_RNDN);
  }
  return s;
}

Real norm2(const RVec& x) {
  Real s(x.at(0).precision());
  Real t(x.at(0).precision());
  mpfr_set_zero(s.raw(), +1);
  for (const Real& xi : x) {
    mpfr_mul(t.raw(), xi.raw(), xi.raw(), MPFR_RNDN);
    mpfr_add(s.raw(), s.raw(), t.raw(), MPFR_RNDN);
  }
  mpfr_sqrt(s.raw(), s.raw(), MPFR_RNDN);
  return s;
}

Real dot(const RVec& a, const RVec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  Real s(a.at(0).precision());
  Real t(a.at(0).precision());
  mpfr_set_zero(s.raw(), +1);
  for (size_t i = 0; i < a.size(); ++i) {
    mpfr_mul(t.raw(), a[i].raw(), b[i].raw(), MPFR_RNDN);
    mpfr_add(s.raw(), s.raw(), t.raw(), MPFR_RNDN);
  }
  return s;
}

Real dist2(const RVec& a, const RVec& b, long dims) {
  if (a.size() != b.size()) throw std::invalid_argument("dist2: dimension mismatch");
  size_t n = dims > 0 ? static_cast<size_t>(dims) : a.size();
  if (n > a.size()) throw std::invalid_argument("dist2: dims out of range");
  Real s(a.at(0).precision());
  Real t(a.at(0).precision());
  mpfr_set_zero(s.raw(), +1);
  for (size_t i = 0; i < n; ++i) {
    mpfr_sub(t.raw(), a[i].raw(), b[i].raw(), MPFR_RNDN);
    mpfr_mul(t.raw(), t.raw(), t.raw(), MPFR_RNDN);
    mpfr_add(s.raw(), s.raw(), t.raw(), MPFR_RNDN);
  }
  mpfr_sqrt(s.raw(), s.raw(), MPFR_RNDN);
  return s;
}

void copy_into(RVec& dst, const RVec& src) {
  if (dst.size() != src.size()) throw std::invalid_argument("copy_into: dimension mismatch");
  for (size_t i = 0; i < src.size(); ++i) mpfr_set(dst[i].raw(), src[i].raw(), MPFR_RNDN);
}

bool bitwise_equal(const RVec& a, const RVec& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].precision() != b[i].precision()) return false;
    if (a[i].is_nan() || b[i].is_nan()) return false;
    if (!(a[i] == b[i])) return false;
  }
  return true;
}

RMat make_mat(long rows, long cols, const PrecisionContext& ctx) {
  RMat m;
  m.rows = rows;
  m.cols = cols;
  m.a.reserve(static_cast<size_t>(rows) * cols);
  for (long i = 0; i < rows * cols; ++i) m.a.push_back(Real::zero(ctx));
  return m;
}

Real colsum_norm(const RMat& m) {
  if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("colsum_norm: empty matrix");
  Real best(m.a.at(0).precision());
  Real col(m.a.at(0).precision());
  Real t(m.a.at(0).precision());
  mpfr_set_zero(best.raw(), +1);
  for (long j = 0; j < m.cols; ++j) {
    mpfr_set_zero(col.raw(), +1);
    for (long i = 0; i < m.rows; ++i) {
      mpfr_abs(t.raw(), m.at(i, j).raw(), MPFR_RNDN);
      mpfr_add(col.raw(), col.raw(), t.raw(), MPFR_RNDN);
    }
    if (col > best) best = col;
  }
  return best;
}

}  // namespace fgbfi
