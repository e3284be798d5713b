#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "fgbfi/io.hpp"
#include "fgbfi/qsystem.hpp"
#include "test_support.hpp"

using namespace fgbfi;
using namespace fgbfi::testing;

namespace {

RVec random_point(long n, double scale, std::mt19937_64& rng, const PrecisionContext& ctx) {
  RVec x;
  for (long i = 0; i < n; ++i) {
    double u = (static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5) * 2.0 * scale;
    Real r(ctx);
    mpfr_set_d(r.raw(), u, MPFR_RNDN);
    x.push_back(std::move(r));
  }
  return x;
}

}  // namespace

TEST_CASE("cached norms of the benchmark system") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  // |A|_1 = max{a+b, a+1, c, e+f+d} = 57 and mu = 4 * 1.5 = 6
  CHECK(sys.norm_a() == Real::of(57, ctx));
  CHECK(sys.mu() == Real::of(6, ctx));
}

TEST_CASE("compute_bounds inside the unit ball") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = vec_of({"0.1", "-0.2", "0.3", "0.05"}, ctx);
  auto b = compute_bounds(sys, x0, parse_decimal("1e-3", ctx));
  CHECK(b.h2 == Real::of(63, ctx));  // |A| + mu when h1 <= 1
  CHECK(b.tau > Real::zero(ctx));
}

TEST_CASE("compute_bounds at a reference attractor point") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x0 = vec_of({"6.2355509634533960831", "2.0140572482317481452", "35.4929323328531102196",
                    "-43.5507482101916799734"},
                   ctx);
  Real delta = parse_decimal("1e-3", ctx);
  auto b = compute_bounds(sys, x0, delta);

  // independent evaluation of h1 = sum |x0_p|, then the h1>1 branch
  Real h1 = abs(x0[0]) + abs(x0[1]) + abs(x0[2]) + abs(x0[3]);
  CHECK(h1.to_double() == doctest::Approx(87.29335).epsilon(1e-6));
  Real expect_h2 = Real::of(6, ctx) * h1 * h1 + Real::of(69, ctx) * h1;
  Real expect_tau = Real::of(1, ctx) / (expect_h2 + delta);
  CHECK(abs(b.h1 - h1) <= Real::pow2(-100, ctx) * h1);
  CHECK(abs(b.h2 - expect_h2) <= Real::pow2(-100, ctx) * expect_h2);
  CHECK(abs(b.tau - expect_tau) <= Real::pow2(-100, ctx) * expect_tau);

  CHECK_THROWS_AS(compute_bounds(sys, x0, Real::zero(ctx)), std::invalid_argument);
  CHECK_THROWS_AS(compute_bounds(sys, x0, Real::of(-1, ctx)), std::invalid_argument);
}

TEST_CASE("tau is non-increasing in |x0|_1 beyond the unit ball") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  Real delta = parse_decimal("1e-3", ctx);
  Real prev_tau = Real::zero(ctx);
  bool first = true;
  for (long s = 2; s <= 128; s *= 2) {
    RVec x0 = make_vec(4, ctx);
    x0[0] = Real::of(s, ctx);
    auto b = compute_bounds(sys, x0, delta);
    CHECK(b.tau > Real::zero(ctx));
    if (!first) CHECK(b.tau <= prev_tau);
    prev_tau = b.tau;
    first = false;
  }
}

TEST_CASE("eval_rhs matches the printed component form") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec x = vec_of({"10", "-27.2011", "10", "10"}, ctx);
  RVec f = eval_rhs(sys, x);
  // x3' = x1*x2 - c*x3 = 10*(-27.2011) - 30 = -302.011
  Real expected = x[0] * x[1] - Real::of(3, ctx) * x[2];
  CHECK(abs(f[2] - expected) <= Real::pow2(-100, ctx) * abs(expected));
  CHECK(f[2].to_double() == doctest::Approx(-302.011).epsilon(1e-12));

  // x1' = a x2 - a x1 - e x4
  Real e1 = Real::of(7, ctx) * (x[1] - x[0]) - Real::of(5, ctx) * x[3];
  CHECK(abs(f[0] - e1) <= Real::pow2(-96, ctx) * abs(e1));
}

TEST_CASE("eval_rhs trivial cases") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  RVec zero = make_vec(4, ctx);
  RVec f = eval_rhs(sys, zero);
  for (const Real& c : f) CHECK(c.is_zero());

  auto ric = make_riccati1d(ctx);
  RVec x{Real::of(2, ctx)};
  CHECK(eval_rhs(ric, x)[0] == Real::of(4, ctx));

  CHECK_THROWS_AS(eval_rhs(sys, x), std::invalid_argument);
}

TEST_CASE("divergence of the benchmark field is -(a+1+c+d) = -21") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  std::mt19937_64 rng(7);
  Real h = Real::pow2(-40, ctx);
  Real two_h = h + h;
  for (int trial = 0; trial < 10; ++trial) {
    RVec x = random_point(4, 50.0, rng, ctx);
    Real div = Real::zero(ctx);
    for (long i = 0; i < 4; ++i) {
      RVec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      Real d = (eval_rhs(sys, xp)[i] - eval_rhs(sys, xm)[i]) / two_h;
      div += d;
    }
    CHECK(abs(div + Real::of(21, ctx)).to_double() < 1e-15);
  }
}

TEST_CASE("variational extension blocks") {
  auto ctx = make_context(128);

  SUBCASE("1-D x' = x^2 extends to x1' = x1^2, x2' = 2 x1 x2") {
    auto sys = make_riccati1d(ctx);
    auto ext = extend_variational(sys);
    CHECK(ext.dim() == 2);
    CHECK(ext.Q()[0].at(0, 0) == Real::of(1, ctx));
    CHECK(ext.Q()[1].at(0, 1) == Real::of(2, ctx));  // q11 + q11
    CHECK(ext.Q()[1].at(1, 0).is_zero());
    CHECK(ext.Q()[1].at(1, 1).is_zero());
  }

  SUBCASE("linear system extends to block-diagonal linear system") {
    auto sys = make_linear1d(-1, ctx);
    auto ext = extend_variational(sys);
    CHECK(ext.dim() == 2);
    for (const RMat& q : ext.Q())
      for (const Real& v : q.a) CHECK(v.is_zero());
    CHECK(ext.A().at(0, 0) == Real::of(-1, ctx));
    CHECK(ext.A().at(1, 1) == Real::of(-1, ctx));
    CHECK(ext.A().at(0, 1).is_zero());
    CHECK(ext.A().at(1, 0).is_zero());
  }

  SUBCASE("benchmark row n+2 bilinear part is -x1 x7 - x3 x5") {
    auto sys = make_dong(ctx);
    auto ext = extend_variational(sys);
    CHECK(ext.dim() == 8);
    const RMat& q6 = ext.Q()[5];
    CHECK(q6.at(0, 6) == Real::of(-1, ctx));
    CHECK(q6.at(2, 4) == Real::of(-1, ctx));
    long nonzero = 0;
    for (const Real& v : q6.a)
      if (!v.is_zero()) ++nonzero;
    CHECK(nonzero == 2);
    // ball: center padded with zeros, radius grown by the perturbation bound
    CHECK(ext.ball().center.size() == 8);
    CHECK(ext.ball().radius == Real::of(202, ctx));
    // extended norms via the same formulas: mu~ = 2n max |Q~|= 8 * 1.5
    CHECK(ext.norm_a() == Real::of(57, ctx));
    CHECK(ext.mu() == Real::of(12, ctx));
  }
}

TEST_CASE("extension bounds use the same formulas at dimension 2n") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  auto ext = extend_variational(sys);
  RVec stacked = vec_of({"6.2355509634533960831", "2.0140572482317481452",
                         "35.4929323328531102196", "-43.5507482101916799734", "0.5", "-0.5",
                         "0.25", "0.25"},
                        ctx);
  Real delta = parse_decimal("1e-3", ctx);
  auto b = compute_bounds(ext, stacked, delta);
  Real h1 = norm1(stacked);
  CHECK(b.h1 == h1);
  // mu~ = 2n max|Q~| = 12, |A~| = 57; h1 > 1 branch
  Real want = Real::of(12, ctx) * h1 * h1 + (Real::of(57, ctx) + Real::of(24, ctx)) * h1;
  CHECK(abs(b.h2 - want) <= Real::pow2(-100, ctx) * want);
  CHECK(b.tau > Real::zero(ctx));
  CHECK(b.tau < compute_bounds(sys, vec_of({"0.1", "0", "0", "0"}, ctx), delta).tau);
}

TEST_CASE("extension perturbation block equals the analytic Jacobian product") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  auto ext = extend_variational(sys);
  std::mt19937_64 rng(11);
  Real a = Real::of(7, ctx), b = Real::of(50, ctx), c = Real::of(3, ctx), d = Real::of(10, ctx),
       e = Real::of(5, ctx), f = Real::of(5, ctx);
  Real k = parse_decimal("1.5", ctx);
  for (int trial = 0; trial < 10; ++trial) {
    RVec x = random_point(4, 40.0, rng, ctx);
    RVec z = random_point(4, 1.0, rng, ctx);
    RVec xz = x;
    for (const Real& zi : z) xz.push_back(zi);
    RVec rhs = eval_rhs(ext, xz);

    // analytic J(x) z for the benchmark field
    RVec jz;
    jz.push_back(a * (z[1] - z[0]) - e * z[3]);
    jz.push_back(b * z[0] - z[1] - (x[0] * z[2] + x[2] * z[0]) - f * z[3]);
    jz.push_back(x[0] * z[1] + x[1] * z[0] - c * z[2]);
    jz.push_back(k * (x[1] * z[2] + x[2] * z[1]) - d * z[3]);

    for (long i = 0; i < 4; ++i) {
      Real tol = Real::pow2(-90, ctx) * (Real::of(1, ctx) + abs(jz[i]));
      CHECK(abs(rhs[4 + i] - jz[i]) <= tol);
    }
    // base block of the extension matches the base field
    RVec base = eval_rhs(sys, x);
    for (long i = 0; i < 4; ++i) CHECK(rhs[i] == base[i]);
  }
}

TEST_CASE("extension is linear in the perturbation coordinates") {
  auto ctx = make_context(128);
  auto sys = make_dong(ctx);
  auto ext = extend_variational(sys);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    RVec x = random_point(4, 40.0, rng, ctx);
    RVec z = random_point(4, 2.0, rng, ctx);
    RVec xz0 = x, xz1 = x, xz2 = x;
    for (long i = 0; i < 4; ++i) {
      xz0.push_back(Real::zero(ctx));
      xz1.push_back(z[static_cast<size_t>(i)]);
      xz2.push_back(z[static_cast<size_t>(i)] + z[static_cast<size_t>(i)]);
    }
    RVec f0 = eval_rhs(ext, xz0);
    RVec f1 = eval_rhs(ext, xz1);
    RVec f2 = eval_rhs(ext, xz2);
    for (long i = 4; i < 8; ++i) {
      Real d1 = f1[i] - f0[i];
      Real d2 = f2[i] - f0[i];
      Real tol = Real::pow2(-90, ctx) * (Real::of(1, ctx) + abs(d2));
      CHECK(abs(d2 - (d1 + d1)) <= tol);
    }
  }
}

TEST_CASE("load_system reads the bundled benchmark file") {
  auto ctx = make_context(128);
  auto sys = load_system(data_file("dong2019.json"), ctx);
  CHECK(sys.dim() == 4);
  CHECK(sys.name() == "dong2019");
  CHECK(sys.norm_a() == Real::of(57, ctx));
  CHECK(sys.mu() == Real::of(6, ctx));
  CHECK(sys.params().at("k") == "1.5");

  // file contents agree with the in-code builder
  auto ref = make_dong(ctx);
  for (long i = 0; i < 4; ++i)
    for (long j = 0; j < 4; ++j) CHECK(sys.A().at(i, j) == ref.A().at(i, j));
  for (long p = 0; p < 4; ++p)
    for (long i = 0; i < 4; ++i)
      for (long j = 0; j < 4; ++j) CHECK(sys.Q()[p].at(i, j) == ref.Q()[p].at(i, j));
}

TEST_CASE("load_system rejects malformed files") {
  auto ctx = make_context(128);
  std::string dir = "./";

  SUBCASE("Q count mismatch names the counts") {
    std::string p = dir + "bad_qcount.json";
    write_file_atomic(p, R"({"n": 2,
      "A": [["0","0"],["0","0"]],
      "Q": [[["0","0"],["0","0"]], [["0","0"],["0","0"]], [["0","0"],["0","0"]]],
      "ball": {"center": ["0","0"], "radius": "1"}})");
    try {
      load_system(p, ctx);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      std::string msg = e.what();
      CHECK(msg.find("n=2") != std::string::npos);
      CHECK(msg.find("3") != std::string::npos);
    }
    std::remove(p.c_str());
  }

  SUBCASE("non-square matrix") {
    std::string p = dir + "bad_shape.json";
    write_file_atomic(p, R"({"n": 2,
      "A": [["0","0","0"],["0","0"]],
      "Q": [[["0","0"],["0","0"]], [["0","0"],["0","0"]]],
      "ball": {"center": ["0","0"], "radius": "1"}})");
    CHECK_THROWS_AS(load_system(p, ctx), ParseError);
    std::remove(p.c_str());
  }

  SUBCASE("missing ball") {
    std::string p = dir + "bad_noball.json";
    write_file_atomic(p, R"({"n": 1, "A": [["0"]], "Q": [[["0"]]]})");
    CHECK_THROWS_AS(load_system(p, ctx), ParseError);
    std::remove(p.c_str());
  }

  SUBCASE("float literals are rejected") {
    std::string p = dir + "bad_float.json";
    write_file_atomic(p, R"({"n": 1, "A": [[0.5]], "Q": [[["0"]]],
      "ball": {"center": ["0"], "radius": "1"}})");
    CHECK_THROWS_AS(load_system(p, ctx), ParseError);
    std::remove(p.c_str());
  }

  SUBCASE("not json at all") {
    std::string p = dir + "bad_syntax.json";
    write_file_atomic(p, "this is not json");
    CHECK_THROWS_AS(load_system(p, ctx), ParseError);
    std::remove(p.c_str());
  }
}

TEST_CASE("save/load round-trip on a random 5-D system") {
  auto ctx = make_context(128);
  std::mt19937_64 rng(99);
  auto sys = make_random_system(5, rng, ctx);
  std::string p = "./roundtrip5d.json";
  save_system(sys, p);
  auto back = load_system(p, ctx);
  std::remove(p.c_str());

  REQUIRE(back.dim() == 5);
  for (long i = 0; i < 5; ++i)
    for (long j = 0; j < 5; ++j) CHECK(back.A().at(i, j) == sys.A().at(i, j));
  for (long q = 0; q < 5; ++q)
    for (long i = 0; i < 5; ++i)
      for (long j = 0; j < 5; ++j) CHECK(back.Q()[q].at(i, j) == sys.Q()[q].at(i, j));
  CHECK(back.ball().radius == sys.ball().radius);
  for (long i = 0; i < 5; ++i) CHECK(back.ball().center[i] == sys.ball().center[i]);
}

TEST_CASE("trapping ball membership") {
  auto ctx = make_context(128);
  TrappingBall ball{make_vec(2, ctx), Real::of(5, ctx)};
  RVec in = vec_of({"3", "4"}, ctx);   // distance exactly 5, boundary inclusive
  RVec out = vec_of({"3.1", "4"}, ctx);
  CHECK(ball.contains(in));
  CHECK_FALSE(ball.contains(out));
  // prefix test ignores the tail coordinates
  RVec far = vec_of({"1", "999"}, ctx);
  CHECK(ball.contains(far, 1));
  CHECK_FALSE(ball.contains(far, 2));
}
