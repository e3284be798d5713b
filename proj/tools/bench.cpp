// Benchmark of the OpenMP kernels against their serial reference paths:
// dense-output grid sampling / recurrence scanning, and the per-perturbation
// propagation loop of the Benettin spectrum.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>

#include "fgbfi/lyapunov.hpp"
#include "fgbfi/parallel.hpp"
#include "fgbfi/recurrence.hpp"

using namespace fgbfi;

namespace {

double seconds(std::chrono::steady_clock::time_point a,
               std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

QuadSystem benchmark_system(const PrecisionContext& ctx) {
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
  return QuadSystem(n, std::move(A), std::move(Q), std::move(ball), "bench");
}

RVec cycle_point(const PrecisionContext& ctx) {
  return parse_vec({"1.6321991613781496393", "8.7300523565474285155",
                    "39.6961687172415982460", "54.8461996449311966025"},
                   ctx);
}

void bench_scan(long bm, const std::string& dtp, const std::string& tp, int threads) {
  PrecisionContext ctx = make_context(bm);
  QuadSystem sys = benchmark_system(ctx);
  RVec x0 = cycle_point(ctx);
  IntegrationConfig cfg(ctx, parse_decimal("1e-20", ctx), parse_decimal("1e-3", ctx),
                        Real::of(1, ctx), +1);

  std::printf("recurrence scan: dt_P=%s, T_P=%s, b_m=%ld\n", dtp.c_str(), tp.c_str(), bm);
  RecurrenceScanConfig serial(GridStep::parse(dtp), GridStep::parse(tp), ctx);
  serial.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  ScanResult rs = scan_trajectory(sys, x0, cfg, serial);
  auto t1 = std::chrono::steady_clock::now();

  RecurrenceScanConfig parallel = serial;
  parallel.threads = threads;
  auto t2 = std::chrono::steady_clock::now();
  ScanResult rp = scan_trajectory(sys, x0, cfg, parallel);
  auto t3 = std::chrono::steady_clock::now();

  bool identical = rs.events.size() == rp.events.size();
  for (size_t i = 0; identical && i < rs.events.size(); ++i)
    identical = rs.events[i].k_star == rp.events[i].k_star &&
                rs.events[i].d_star == rp.events[i].d_star;
  double ts = seconds(t0, t1), tpar = seconds(t2, t3);
  std::printf("  serial   : %8.3f s  (%zu events)\n", ts, rs.events.size());
  std::printf("  %2d thread: %8.3f s  speedup %.2fx  results %s\n", threads, tpar, ts / tpar,
              identical ? "identical" : "DIFFER");
}

void bench_lyapunov(long bm, long M, int threads) {
  PrecisionContext ctx = make_context(bm);
  QuadSystem sys = benchmark_system(ctx);
  RVec x0 = cycle_point(ctx);
  Real T(ctx);
  mpfr_mul_ui(T.raw(), parse_decimal("0.005", ctx).raw(), static_cast<unsigned long>(M),
              MPFR_RNDN);

  std::printf("benettin macro-steps: M=%ld, tau_M=0.005, b_m=%ld\n", M, bm);
  BenettinConfig serial(ctx, T, M, 1, parse_decimal("1e-20", ctx), parse_decimal("1e-3", ctx));
  serial.threads = 1;
  serial.keep_trace = false;
  auto t0 = std::chrono::steady_clock::now();
  SpectrumResult rs = lyapunov_spectrum(sys, x0, serial);
  auto t1 = std::chrono::steady_clock::now();

  BenettinConfig parallel = serial;
  parallel.threads = threads;
  auto t2 = std::chrono::steady_clock::now();
  SpectrumResult rp = lyapunov_spectrum(sys, x0, parallel);
  auto t3 = std::chrono::steady_clock::now();

  bool identical = bitwise_equal(rs.exponents, rp.exponents);
  double ts = seconds(t0, t1), tpar = seconds(t2, t3);
  std::printf("  serial   : %8.3f s\n", ts);
  std::printf("  %2d thread: %8.3f s  speedup %.2fx  results %s\n", threads, tpar, ts / tpar,
              identical ? "identical" : "DIFFER");
  std::printf("  running estimates: ");
  for (const Real& v : rs.exponents) std::printf("%+.4f ", v.to_double());
  std::printf("(short run, not converged)\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel benchmark"};
  long bm = 128;
  long M = 100;
  int threads = par::max_threads();
  std::string dtp = "1e-4";
  std::string tp = "2";
  std::string what = "all";
  app.add_option("--what", what, "scan | lyapunov | all")->capture_default_str();
  app.add_option("--bm", bm)->capture_default_str();
  app.add_option("--dtP", dtp)->capture_default_str();
  app.add_option("--TP", tp)->capture_default_str();
  app.add_option("--M", M)->capture_default_str();
  app.add_option("--threads", threads)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  std::printf("hardware threads available: %d\n\n", par::max_threads());
  if (what == "scan" || what == "all") bench_scan(bm, dtp, tp, threads);
  if (what == "lyapunov" || what == "all") bench_lyapunov(bm, M, threads);
  return 0;
}
