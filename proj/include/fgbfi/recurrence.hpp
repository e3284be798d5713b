#pragma once

#include <optional>
#include <string_view>

#include "fgbfi/integrate.hpp"

namespace fgbfi {

/// Exact decimal grid step: value = mant * 10^(-exp10), mant > 0.
///
/// Grid times t_k = k * mant / 10^exp10 are rounded once from the exact
/// rational, so a grid and its decimal refinements produce bit-identical
/// times at shared points.
struct GridStep {
  unsigned long long mant = 1;
  int exp10 = 0;

  static GridStep parse(std::string_view text);

  /// One decimal magnitude finer.
  GridStep refined() const { return {mant, exp10 + 1}; }

  Real value(const PrecisionContext& ctx) const;
  std::string str() const;

  friend bool operator==(const GridStep& a, const GridStep& b) {
    return a.mant == b.mant && a.exp10 == b.exp10;
  }
};

/// Correctly rounded t_k = k * dt for an exact decimal dt.
class GridClock {
 public:
  GridClock(const GridStep& step, const PrecisionContext& ctx);
  void time_at(unsigned long long k, Real& out);
  unsigned long long max_index() const;  ///< largest k with k*mant representable

 private:
  GridStep step_;
  Real num_;  // high-precision scratch, holds k*mant exactly
  Real den_;  // 10^exp10, exact
};

/// N_P = floor(T_P / dt_P), computed on the exact decimals.
unsigned long long grid_point_count(const GridStep& dt_P, const GridStep& T_P);

struct RecurrenceScanConfig {
  GridStep dt_P;
  GridStep T_P;
  Real threshold;  ///< rapprochement ceiling on the Euclidean distance
  int max_refine_levels = 4;
  int threads = 0;  ///< sampling parallelism; 1 = serial reference path

  RecurrenceScanConfig(const GridStep& dt, const GridStep& horizon, const PrecisionContext& ctx)
      : dt_P(dt), T_P(horizon), threshold(Real::of(1, ctx)) {}
};

/// Local rapprochement with the start point: d_{k-1} > d_k < d_{k+1} and
/// d_k below the threshold.
struct RecurrenceEvent {
  unsigned long long k_star;
  Real t_star;
  Real d_star;
};

/// Materialized dense-output table (t_k, X_k), k = 0..N_P. Row 0 is the
/// start state itself.
struct SampleTable {
  std::vector<Real> t;
  std::vector<RVec> x;
  bool escaped = false;  ///< trajectory left the ball before covering the grid
};

/// Sample the trajectory on the uniform grid by evaluating each step's local
/// polynomial (no re-integration). Memory grows with N_P; use
/// scan_trajectory for fine grids.
SampleTable sample_grid(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const RecurrenceScanConfig& scan);

/// Reference detector over a materialized table; distances to row 0.
std::vector<RecurrenceEvent> scan_recurrences(const SampleTable& table, const Real& threshold);

/// Streaming dense-output sampling in bounded memory: on_sample(k, t_k, X_k)
/// fires in k order. Returns true if the trajectory escaped the ball before
/// covering the grid.
bool stream_grid(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                 const RecurrenceScanConfig& scan,
                 const std::function<void(unsigned long long, const Real&, const RVec&)>&
                     on_sample);

/// Streaming detector: integrates, samples and applies the predicate in
/// bounded memory. Sample blocks evaluate in parallel (OpenMP) when
/// threads != 1; results are identical to the serial reference.
struct ScanResult {
  std::vector<RecurrenceEvent> events;
  unsigned long long n_points = 0;
  bool escaped = false;
};
ScanResult scan_trajectory(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                           const RecurrenceScanConfig& scan);

/// Interval statistics of the detected returns. period_estimate is set only
/// when the coefficient of variation of the intervals is below
/// regularity_cv (regular returns).
struct ReturnStats {
  std::vector<RecurrenceEvent> events;
  std::vector<Real> intervals;
  std::optional<Real> mean_interval;
  std::optional<Real> stddev_interval;
  std::optional<Real> period_estimate;
};
ReturnStats return_statistics(std::vector<RecurrenceEvent> events, double regularity_cv = 0.01);

/// One refinement level of refine_scan.
struct RefinementLevel {
  GridStep dt;
  unsigned long long n_events = 0;
  std::optional<Real> min_d;
};

/// Rescan at dt_P, dt_P/10, ... until the minimum rapprochement distance
/// changes by less than 10% between consecutive levels, the level cap is
/// reached, or dt_P hits the precision floor.
struct RefinedScan {
  ReturnStats stats;  ///< finest level scanned
  std::vector<RefinementLevel> trail;
  GridStep final_dt;
  bool hit_floor = false;
  bool hit_level_cap = false;
};
RefinedScan refine_scan(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const RecurrenceScanConfig& scan);

}  // namespace fgbfi
