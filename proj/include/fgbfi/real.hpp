#pragma once

#include <mpfr.h>

#include <string>
#include <string_view>
#include <utility>

#include "fgbfi/errors.hpp"

namespace fgbfi {

class Real;

/// Working precision shared by every scalar of a computation.
///
/// mantissa_bits is the significand width b_m; the derived machine epsilon is
/// eps_m = 2^(1-b_m). Contexts are immutable values, cheap to copy.
class PrecisionContext {
 public:
  static constexpr long kMinMantissaBits = 24;

  explicit PrecisionContext(long mantissa_bits);

  long mantissa_bits() const { return bits_; }

  /// 2^(1-b_m), exact.
  Real machine_epsilon() const;

  friend bool operator==(const PrecisionContext& a, const PrecisionContext& b) {
    return a.bits_ == b.bits_;
  }

 private:
  long bits_;
};

/// Context factory; rejects mantissa_bits < 24.
PrecisionContext make_context(long mantissa_bits);

/// Arbitrary-precision real with value semantics (MPFR-backed).
///
/// Each Real carries the precision it was created with. Binary operations
/// require both operands at the same precision and throw PrecisionMismatch
/// otherwise; results keep that precision. Rounding is to nearest-even
/// everywhere. A default-constructed state does not exist: construct from a
/// context or another Real.
class Real {
 public:
  explicit Real(const PrecisionContext& ctx) { mpfr_init2(v_, ctx.mantissa_bits()); }
  explicit Real(mpfr_prec_t prec) { mpfr_init2(v_, prec); }

  Real(const Real& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  Real(Real&& o) noexcept {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_swap(v_, o.v_);
  }
  Real& operator=(const Real& o) {
    if (this != &o) {
      check_same(o);
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  Real& operator=(Real&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  static Real zero(const PrecisionContext& ctx) {
    Real r(ctx);
    mpfr_set_zero(r.v_, +1);
    return r;
  }
  static Real of(long value, const PrecisionContext& ctx) {
    Real r(ctx);
    mpfr_set_si(r.v_, value, MPFR_RNDN);
    return r;
  }
  /// 2^e, exact at any precision.
  static Real pow2(long e, const PrecisionContext& ctx) {
    Real r(ctx);
    mpfr_set_ui_2exp(r.v_, 1, e, MPFR_RNDN);
    return r;
  }

  mpfr_ptr raw() { return v_; }
  mpfr_srcptr raw() const { return v_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

  bool is_nan() const { return mpfr_nan_p(v_) != 0; }
  bool is_inf() const { return mpfr_inf_p(v_) != 0; }
  bool is_finite() const { return mpfr_number_p(v_) != 0; }
  bool is_zero() const { return mpfr_zero_p(v_) != 0; }
  int sign() const { return mpfr_sgn(v_); }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  long to_long() const { return mpfr_get_si(v_, MPFR_RNDN); }

  Real& operator+=(const Real& o) {
    check_same(o);
    mpfr_add(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator-=(const Real& o) {
    check_same(o);
    mpfr_sub(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator*=(const Real& o) {
    check_same(o);
    mpfr_mul(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }
  Real& operator/=(const Real& o) {
    check_same(o);
    mpfr_div(v_, v_, o.v_, MPFR_RNDN);
    return *this;
  }

  friend Real operator+(Real a, const Real& b) { return a += b; }
  friend Real operator-(Real a, const Real& b) { return a -= b; }
  friend Real operator*(Real a, const Real& b) { return a *= b; }
  friend Real operator/(Real a, const Real& b) { return a /= b; }
  friend Real operator-(const Real& a) {
    Real r(a.precision());
    mpfr_neg(r.v_, a.v_, MPFR_RNDN);
    return r;
  }

  friend bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.v_, b.v_) != 0; }
  friend bool operator!=(const Real& a, const Real& b) { return !(a == b); }
  friend bool operator<(const Real& a, const Real& b) { return mpfr_less_p(a.v_, b.v_) != 0; }
  friend bool operator<=(const Real& a, const Real& b) { return mpfr_lessequal_p(a.v_, b.v_) != 0; }
  friend bool operator>(const Real& a, const Real& b) { return mpfr_greater_p(a.v_, b.v_) != 0; }
  friend bool operator>=(const Real& a, const Real& b) {
    return mpfr_greaterequal_p(a.v_, b.v_) != 0;
  }

 private:
  void check_same(const Real& o) const {
    if (mpfr_get_prec(v_) != mpfr_get_prec(o.v_))
      throw PrecisionMismatch("mixed-precision arithmetic: operands carry different contexts");
  }

  mpfr_t v_;
};

Real abs(const Real& x);
Real sqrt(const Real& x);
Real log(const Real& x);
Real exp(const Real& x);
Real sin(const Real& x);
Real min(const Real& a, const Real& b);
Real max(const Real& a, const Real& b);

/// Correctly rounded value of a signed decimal numeral (optional exponent) at
/// ctx precision. Throws ParseError on malformed or non-finite input.
Real parse_decimal(std::string_view text, const PrecisionContext& ctx);

/// Shortest-form decimal serialization that re-reads bit-exactly at the
/// value's own precision: parse_decimal(format_decimal(v)) == v.
std::string format_decimal(const Real& x);

}  // namespace fgbfi
