#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fgbfi/series.hpp"
#include "test_support.hpp"

using namespace fgbfi;
using namespace fgbfi::testing;

TEST_CASE("geometric coefficients of x' = x^2") {
  auto ctx = make_context(128);
  auto sys = make_riccati1d(ctx);
  // closed form x(t) = x0/(1 - x0 t): Y_j = x0^{j+1}; with x0 = 2 these are
  // exact powers of two
  std::vector<RVec> coeffs;
  coeffs.push_back(RVec{Real::of(2, ctx)});
  for (long j = 1; j <= 12; ++j) {
    RVec next = next_coefficient(sys, coeffs);
    coeffs.push_back(next);
    CHECK(next[0] == Real::pow2(j + 1, ctx));
  }
}

TEST_CASE("linear system collapses to the exponential recurrence") {
  auto ctx = make_context(128);
  auto sys = make_linear1d(-1, ctx);
  std::vector<RVec> coeffs;
  coeffs.push_back(RVec{Real::of(1, ctx)});
  Real fact = Real::of(1, ctx);
  for (long j = 1; j <= 20; ++j) {
    coeffs.push_back(next_coefficient(sys, coeffs));
    fact *= Real::of(j, ctx);
    // Y_j = (-1)^j / j!
    Real expected = Real::of(j % 2 == 0 ? 1 : -1, ctx) / fact;
    CHECK(abs(coeffs.back()[0] - expected) <= Real::pow2(-110, ctx) * abs(expected));
  }
}

TEST_CASE("coefficients vanish at an equilibrium") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  std::vector<RVec> coeffs;
  coeffs.push_back(make_vec(4, ctx));  // origin is an equilibrium
  for (long j = 1; j <= 5; ++j) {
    coeffs.push_back(next_coefficient(sys, coeffs));
    for (const Real& c : coeffs.back()) CHECK(c.is_zero());
  }
}

TEST_CASE("first coefficient equals the right-hand side") {
  // d/dt of the polynomial at 0 is Y_1 = A Y_0 + Phi(Y_0), bit for bit
  auto ctx = make_context(128);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    long n = 1 + static_cast<long>(rng() % 3);
    auto sys = make_random_system(n, rng, ctx);
    RVec x0;
    for (long i = 0; i < n; ++i) {
      Real r(ctx);
      mpfr_set_d(r.raw(), (static_cast<double>(rng() % 1000) - 500.0) / 250.0, MPFR_RNDN);
      x0.push_back(std::move(r));
    }
    std::vector<RVec> coeffs{x0};
    RVec y1 = next_coefficient(sys, coeffs);
    RVec f = eval_rhs(sys, x0);
    for (long i = 0; i < n; ++i) CHECK(y1[i] == f[i]);
  }
}

TEST_CASE("convolution term equals brute-force polynomial multiplication") {
  // psi_{i,p} from the engine's Cauchy product vs the i-th coefficient of
  // <Q_p X(t), X(t)> computed by explicit polynomial products
  auto ctx = make_context(128);
  Real tol_unit = Real::of(10, ctx) * ctx.machine_epsilon();
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    long n = 1 + static_cast<long>(rng() % 3);
    auto sys = make_random_system(n, rng, ctx);
    long deg = 2 + static_cast<long>(rng() % 7);  // series degree <= 8
    std::vector<RVec> coeffs;
    for (long j = 0; j <= deg; ++j) {
      RVec row;
      for (long c = 0; c < n; ++c) {
        Real r(ctx);
        mpfr_set_si(r.raw(), static_cast<long>(rng() % 9) - 4, MPFR_RNDN);
        mpfr_div_2ui(r.raw(), r.raw(), 2, MPFR_RNDN);  // dyadic in [-1, 1]
        row.push_back(std::move(r));
      }
      coeffs.push_back(std::move(row));
    }
    for (long i = 0; i <= deg; ++i) {
      RVec psi = convolution_term(sys, coeffs, i);
      for (long p = 0; p < n; ++p) {
        // brute force: coefficient of t^i in sum_{r,c} q_rc * x_c(t) x_r(t)
        Real want = Real::zero(ctx);
        for (long r = 0; r < n; ++r)
          for (long c = 0; c < n; ++c) {
            if (sys.Q()[p].at(r, c).is_zero()) continue;
            Real conv = Real::zero(ctx);
            for (long a = 0; a <= i; ++a) conv += coeffs[a][c] * coeffs[i - a][r];
            want += sys.Q()[p].at(r, c) * conv;
          }
        Real scale = max(Real::of(1, ctx), abs(want));
        CHECK(abs(psi[p] - want) <= tol_unit * scale);
      }
    }
  }
}

TEST_CASE("engine agrees with the public recurrence") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = dong_start(ctx);
  Real dt = parse_decimal("1e-5", ctx);
  Real eps = parse_decimal("1e-20", ctx);

  SeriesEngine engine(sys);
  int m = engine.expand(x0, dt, eps);
  REQUIRE(m >= 2);

  std::vector<RVec> ref{x0};
  for (int j = 1; j <= m; ++j) ref.push_back(next_coefficient(sys, ref));
  auto got = engine.coeffs();
  REQUIRE(static_cast<int>(got.size()) == m + 1);
  for (int j = 0; j <= m; ++j)
    for (long c = 0; c < 4; ++c) CHECK(got[j][c] == ref[j][c]);
}

TEST_CASE("truncation degree for the closed-form tail") {
  auto ctx = make_context(128);
  auto sys = make_riccati1d(ctx);
  RVec x0 = vec_of({"0.5"}, ctx);
  // |Y_i| = 0.5^{i+1}; first i with 0.5^{i+1} 0.1^i < 1e-20 is 16
  auto st = truncate(sys, x0, parse_decimal("0.1", ctx), parse_decimal("1e-20", ctx));
  CHECK(st.degree == 16);
  CHECK(static_cast<long>(st.coeffs.size()) == 17);
}

TEST_CASE("truncation at an equilibrium stops at degree 1") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  auto st = truncate(sys, make_vec(4, ctx), parse_decimal("0.01", ctx),
                     parse_decimal("1e-20", ctx));
  CHECK(st.degree == 1);
  for (const Real& c : st.coeffs[1]) CHECK(c.is_zero());
}

TEST_CASE("truncation failure reports the degree budget") {
  auto ctx = make_context(128);
  auto sys = make_riccati1d(ctx);
  RVec x0 = vec_of({"0.9"}, ctx);
  // dt = 1 is outside the convergence radius 1/h2; the tail cannot pass
  CHECK_THROWS_AS(truncate(sys, x0, Real::of(2, ctx), parse_decimal("1e-20", ctx), 50),
                  TruncationFailure);
}

TEST_CASE("eval_poly basics") {
  auto ctx = make_context(128);
  auto sys = make_riccati1d(ctx);
  RVec x0 = vec_of({"0.5"}, ctx);
  auto st = truncate(sys, x0, parse_decimal("0.1", ctx), parse_decimal("1e-20", ctx));

  SUBCASE("exact at t = 0") {
    RVec v = eval_poly(st, Real::zero(ctx));
    CHECK(v[0] == x0[0]);
  }

  SUBCASE("matches the closed form 10/19 at t = 0.1") {
    RVec v = eval_poly(st, parse_decimal("0.1", ctx));
    Real want = Real::of(10, ctx) / Real::of(19, ctx);
    CHECK(abs(v[0] - want) <= parse_decimal("1e-18", ctx));
  }

  SUBCASE("linear in the coefficients") {
    SeriesState doubled = st;
    for (auto& row : doubled.coeffs)
      for (auto& c : row) c += c;
    Real t = parse_decimal("0.05", ctx);
    Real a = eval_poly(st, t)[0];
    Real b = eval_poly(doubled, t)[0];
    CHECK(abs(b - (a + a)) <= Real::pow2(-100, ctx) * abs(b));
  }
}

TEST_CASE("certified decay inside the convergence interval") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = vec_of({"6.2355509634533960831", "2.0140572482317481452", "35.4929323328531102196",
                    "-43.5507482101916799734"},
                   ctx);
  auto bounds = compute_bounds(sys, x0, parse_decimal("1e-3", ctx));
  auto st = truncate(sys, x0, bounds.tau, parse_decimal("1e-20", ctx));
  CHECK(st.degree >= 3);
  CHECK(st.degree < 100);  // tens, not thousands

  // |Y_i| tau^i strictly decreasing over the truncation range after i = 1
  Real pw = Real::of(1, ctx);
  std::vector<Real> terms;
  for (int i = 0; i <= st.degree; ++i) {
    terms.push_back(norm1(st.coeffs[static_cast<size_t>(i)]) * pw);
    pw *= bounds.tau;
  }
  for (size_t i = 2; i < terms.size(); ++i) CHECK(terms[i] < terms[i - 1]);
}
