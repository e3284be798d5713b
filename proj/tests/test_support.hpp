#pragma once

#include <cstdlib>
#include <random>
#include <string>

#include "fgbfi/qsystem.hpp"

namespace fgbfi::testing {

inline std::string data_dir() {
  const char* d = std::getenv("FGBFI_DATA_DIR");
  return d ? d : "data";
}

inline std::string data_file(const std::string& name) { return data_dir() + "/" + name; }

/// The fourth-order dissipative benchmark system, built in code so tests do
/// not depend on the bundled file.
inline QuadSystem make_dong(const PrecisionContext& ctx) {
  long n = 4;
  RMat A = make_mat(n, n, ctx);
  auto set = [&](RMat& m, long i, long j, long v) { m.at(i, j) = Real::of(v, ctx); };
  set(A, 0, 0, -7);
  set(A, 0, 1, 7);
  set(A, 0, 3, -5);
  set(A, 1, 0, 50);
  set(A, 1, 1, -1);
  set(A, 1, 3, -5);
  set(A, 2, 2, -3);
  set(A, 3, 3, -10);
  std::vector<RMat> Q;
  for (int p = 0; p < 4; ++p) Q.push_back(make_mat(n, n, ctx));
  Q[1].at(0, 2) = Real::of(-1, ctx);
  Q[2].at(0, 1) = Real::of(1, ctx);
  Q[3].at(1, 2) = parse_decimal("1.5", ctx);
  TrappingBall ball{make_vec(n, ctx), Real::of(200, ctx)};
  return QuadSystem(n, std::move(A), std::move(Q), std::move(ball), "dong2019");
}

/// 1-D x' = x^2.
inline QuadSystem make_riccati1d(const PrecisionContext& ctx, long ball_radius = 1000) {
  RMat A = make_mat(1, 1, ctx);
  std::vector<RMat> Q;
  Q.push_back(make_mat(1, 1, ctx));
  Q[0].at(0, 0) = Real::of(1, ctx);
  TrappingBall ball{make_vec(1, ctx), Real::of(ball_radius, ctx)};
  return QuadSystem(1, std::move(A), std::move(Q), std::move(ball), "riccati1d");
}

/// 1-D x' = a*x (linear).
inline QuadSystem make_linear1d(long a, const PrecisionContext& ctx, long ball_radius = 1000) {
  RMat A = make_mat(1, 1, ctx);
  A.at(0, 0) = Real::of(a, ctx);
  std::vector<RMat> Q;
  Q.push_back(make_mat(1, 1, ctx));
  TrappingBall ball{make_vec(1, ctx), Real::of(ball_radius, ctx)};
  return QuadSystem(1, std::move(A), std::move(Q), std::move(ball), "linear1d");
}

/// Random small system with dyadic entries (exactly representable),
/// moderate magnitudes, about half the entries zero.
inline QuadSystem make_random_system(long n, std::mt19937_64& rng, const PrecisionContext& ctx) {
  auto coin = [&](int denom_pow) {
    if (rng() % 2 == 0) return Real::zero(ctx);
    long num = static_cast<long>(rng() % 33) - 16;
    Real r = Real::of(num, ctx);
    mpfr_div_2ui(r.raw(), r.raw(), static_cast<unsigned long>(denom_pow), MPFR_RNDN);
    return r;
  };
  RMat A = make_mat(n, n, ctx);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) A.at(i, j) = coin(3);
  std::vector<RMat> Q;
  for (long p = 0; p < n; ++p) {
    RMat q = make_mat(n, n, ctx);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) q.at(i, j) = coin(4);
    Q.push_back(std::move(q));
  }
  TrappingBall ball{make_vec(n, ctx), Real::of(1000000, ctx)};
  return QuadSystem(n, std::move(A), std::move(Q), std::move(ball), "random");
}

/// Vector of decimal strings.
inline RVec vec_of(std::initializer_list<const char*> items, const PrecisionContext& ctx) {
  RVec v;
  for (const char* s : items) v.push_back(parse_decimal(s, ctx));
  return v;
}

/// |a - b| <= tol elementwise in the 1-norm sense.
inline Real gap1(const RVec& a, const RVec& b) {
  RVec d = a;
  for (size_t i = 0; i < d.size(); ++i) d[i] -= b[i];
  return norm1(d);
}

/// The reference start point: (10, 50 sin 10, 10, 10).
inline RVec dong_start(const PrecisionContext& ctx) {
  RVec x0;
  x0.push_back(Real::of(10, ctx));
  x0.push_back(Real::of(50, ctx) * fgbfi::sin(Real::of(10, ctx)));
  x0.push_back(Real::of(10, ctx));
  x0.push_back(Real::of(10, ctx));
  return x0;
}

}  // namespace fgbfi::testing
