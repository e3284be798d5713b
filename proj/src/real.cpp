#include "fgbfi/real.hpp"

#include <cctype>
#include <cstdlib>
#include <cstring>

namespace fgbfi {

PrecisionContext::PrecisionContext(long mantissa_bits) : bits_(mantissa_bits) {
  if (mantissa_bits < kMinMantissaBits)
    throw std::invalid_argument("mantissa_bits must be at least 24, got " +
                                std::to_string(mantissa_bits));
  if (mantissa_bits > MPFR_PREC_MAX)
    throw std::invalid_argument("mantissa_bits exceeds MPFR_PREC_MAX");
}

Real PrecisionContext::machine_epsilon() const { return Real::pow2(1 - bits_, *this); }

PrecisionContext make_context(long mantissa_bits) { return PrecisionContext(mantissa_bits); }

Real abs(const Real& x) {
  Real r(x.precision());
  mpfr_abs(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

Real sqrt(const Real& x) {
  Real r(x.precision());
  mpfr_sqrt(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

Real log(const Real& x) {
  Real r(x.precision());
  mpfr_log(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

Real exp(const Real& x) {
  Real r(x.precision());
  mpfr_exp(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

Real sin(const Real& x) {
  Real r(x.precision());
  mpfr_sin(r.raw(), x.raw(), MPFR_RNDN);
  return r;
}

Real min(const Real& a, const Real& b) { return a <= b ? a : b; }
Real max(const Real& a, const Real& b) { return a >= b ? a : b; }

Real parse_decimal(std::string_view text, const PrecisionContext& ctx) {
  // Strict: the whole token must be one finite decimal numeral.
  size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string tok(text.substr(b, e - b));
  if (tok.empty()) throw ParseError("empty numeral");
  char c0 = tok[0];
  if (!(std::isdigit(static_cast<unsigned char>(c0)) || c0 == '+' || c0 == '-' || c0 == '.'))
    throw ParseError("malformed numeral: '" + tok + "'");

  Real r(ctx);
  char* end = nullptr;
  mpfr_strtofr(r.raw(), tok.c_str(), &end, 10, MPFR_RNDN);
  if (end != tok.c_str() + tok.size())
    throw ParseError("malformed numeral: '" + tok + "'");
  if (!r.is_finite())
    throw ParseError("numeral magnitude not representable: '" + tok + "'");
  return r;
}

std::string format_decimal(const Real& x) {
  if (x.is_nan()) return "nan";
  if (x.is_inf()) return x.sign() < 0 ? "-inf" : "inf";
  if (x.is_zero()) return "0";

  mpfr_exp_t exp10 = 0;
  char* s = mpfr_get_str(nullptr, &exp10, 10, 0, x.raw(), MPFR_RNDN);
  std::string digits(s);
  mpfr_free_str(s);

  bool neg = !digits.empty() && digits[0] == '-';
  if (neg) digits.erase(0, 1);
  while (digits.size() > 1 && digits.back() == '0') digits.pop_back();

  // Value is 0.<digits> * 10^exp10; emit as d.ddd...e<exp10-1>.
  std::string out;
  if (neg) out += '-';
  out += digits[0];
  if (digits.size() > 1) {
    out += '.';
    out.append(digits, 1, std::string::npos);
  }
  out += 'e';
  out += std::to_string(static_cast<long>(exp10) - 1);
  return out;
}

}  // namespace fgbfi
