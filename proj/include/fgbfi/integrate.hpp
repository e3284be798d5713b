#pragma once

#include <functional>
#include <optional>
#include <string>

#include "fgbfi/series.hpp"

namespace fgbfi {

/// Everything one integration run needs besides the system and the start
/// point. way selects the time direction; eps_pw is the series-tail
/// tolerance and must sit well above the machine epsilon (>= 1e6 * eps_m).
struct IntegrationConfig {
  PrecisionContext ctx;
  Real eps_pw;
  Real delta;
  Real T;
  int way = +1;
  int max_degree = 1000;

  /// Restrict the trapping-ball test to the first ball_dims coordinates
  /// (0 = all). Used by the Lyapunov engine to guard the base state only.
  long ball_dims = 0;

  /// When positive, the step schedule is computed from the 1-norm of the
  /// first sched_dims coordinates plus sched_pad instead of the full state
  /// 1-norm. The remaining block must stay below the allowance (Euclidean
  /// norm <= sched_pad_norm2), which every step verifies. Keeps the
  /// schedule independent of the perturbation block in the Benettin loop.
  long sched_dims = 0;
  Real sched_pad;
  Real sched_pad_norm2;

  /// When positive, the series tail criterion is applied per block (first
  /// tail_split coordinates, then the rest) and each block is evaluated at
  /// its own stopping degree. With the padded schedule above this makes the
  /// base block's propagation fully independent of the perturbation block,
  /// bit for bit. 0 keeps the plain whole-state criterion.
  long tail_split = 0;

  /// Retain per-step records in the returned arc (tests / small runs).
  bool keep_steps = false;

  IntegrationConfig(const PrecisionContext& c, const Real& eps, const Real& del, const Real& horizon,
                    int direction = +1)
      : ctx(c),
        eps_pw(eps),
        delta(del),
        T(horizon),
        way(direction),
        sched_pad(Real::zero(c)),
        sched_pad_norm2(Real::zero(c)) {}

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

/// One completed integration step, in signed time.
struct StepRecord {
  Real t_start;
  Real t_end;
  Real dt;  ///< signed step, t_end - t_start
  int degree = 0;
  RVec endpoint;
};

/// The per-arc numbers of the step statistics: counts, extremal degree and
/// step, and where they occurred.
struct ArcStats {
  long N = 0;
  int n_max = 0;
  long l_max = 0;  ///< 1-based index of the max-degree step
  Real dt_max;     ///< max |dt_l|
  long d_max = 0;  ///< 1-based index of the max-step interval
  Real t_at_nmax;  ///< signed end time of step l_max
  Real t_at_dtmax; ///< signed end time of step d_max

  explicit ArcStats(const PrecisionContext& ctx)
      : dt_max(Real::zero(ctx)), t_at_nmax(Real::zero(ctx)), t_at_dtmax(Real::zero(ctx)) {}
};

/// Verbatim diagnostic printed when a trajectory leaves the trapping ball.
inline constexpr const char* kBallEscapeAdvice = "Decrease the value ε_pw and/or ε_m";

/// Result of one integration run. Intervals tile [0, way*T] contiguously;
/// the last step is clipped to land exactly on the horizon. If the ball was
/// escaped the arc terminates at the escaping step and diagnostic carries
/// the advice string.
struct TrajectoryArc {
  int way = +1;
  bool escaped_ball = false;
  std::string diagnostic;
  ArcStats stats;
  Real t_end;
  RVec endpoint;
  std::vector<StepRecord> steps;  ///< populated iff cfg.keep_steps

  explicit TrajectoryArc(const PrecisionContext& ctx) : stats(ctx), t_end(Real::zero(ctx)) {}
};

/// Read-only view of the step just completed, local polynomial included.
/// Spans stay valid only during the callback.
struct StepView {
  long index;  ///< 1-based
  const Real& t_start;
  const Real& t_end;
  const Real& dt;
  int degree;
  std::span<const RVec> coeffs;
  const RVec& endpoint;
};

using StepCallback = std::function<void(const StepView&)>;

/// Pull-based stepper: one certified series step per advance() call.
/// Memory stays bounded by one local polynomial regardless of horizon.
class ArcCursor {
 public:
  ArcCursor(const QuadSystem& sys, const IntegrationConfig& cfg, const RVec& x0);

  /// Advance one step. Returns false once the horizon was reached or the
  /// ball was escaped (the escaping step itself is still exposed).
  bool advance();

  bool done() const { return done_; }
  bool escaped() const { return escaped_; }
  long steps_taken() const { return index_; }

  /// View of the current (last completed) step.
  StepView view() const;

  /// Evaluate the current step's polynomial at an absolute signed time
  /// inside the step.
  void eval_at(const Real& t_signed, RVec& out) const;

  const RVec& state() const { return x_; }       ///< endpoint of last step
  const Real& t_signed() const { return t_signed_; }
  const ArcStats& stats() const { return stats_; }
  const IntegrationConfig& config() const { return cfg_; }

 private:
  const QuadSystem* sys_;
  IntegrationConfig cfg_;
  SeriesEngine engine_;
  RVec x_;
  RVec x_next_;
  long index_ = 0;
  bool done_ = false;
  bool escaped_ = false;
  Real t_;         // unsigned elapsed time
  Real t_signed_;  // way * t_
  Real t_prev_signed_;
  Real dt_abs_, dt_signed_, h1_, h2_, tau_, rem_, scratch_, local_;
  Real one_;
  Real radius_sq_;
  long ball_test_dims_;
  ArcStats stats_;
};

/// Run the 16-step scheme over [0, way*T]; on_step (when set) sees every
/// completed step in order.
TrajectoryArc integrate(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const StepCallback& on_step = {});

/// Accuracy criterion 1: re-run with a tightened tail tolerance
/// (max(eps_pw^2, eps_pw*1e-5), which must stay >= 1e6*eps_m) and measure
/// the largest 1-norm gap over step endpoints plus 10 interior samples per
/// step.
struct ForwardCheck {
  bool pass = false;
  Real delta_a;
  Real eps_low;   ///< tightened tolerance actually used
  std::string note;

  explicit ForwardCheck(const PrecisionContext& ctx)
      : delta_a(Real::zero(ctx)), eps_low(Real::zero(ctx)) {}
};
ForwardCheck verify_forward(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                            const Real& eps_a);

/// Accuracy criterion 2: integrate forward over [0,T], return backward from
/// the endpoint, and compare the returned point with x0 in the 1-norm.
struct BackwardCheck {
  bool pass = false;
  Real return_distance;
  ArcStats forward_stats;
  ArcStats backward_stats;
  RVec forward_endpoint;
  bool backward_escaped = false;
  std::string note;

  explicit BackwardCheck(const PrecisionContext& ctx)
      : return_distance(Real::zero(ctx)), forward_stats(ctx), backward_stats(ctx) {}
};
BackwardCheck verify_backward(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                              const Real& eps_R);

/// Accuracy criterion 3: compare the forward and backward step
/// configurations within a relative tolerance.
struct ConfigCheck {
  std::string name;
  double lhs = 0, rhs = 0, rel_err = 0;
  bool pass = false;
};
struct ConfigComparison {
  std::vector<ConfigCheck> checks;
  bool all_pass = false;
  std::string informational;  ///< paper-form check, index of max step: d_max fwd + bwd vs N
};
ConfigComparison compare_configurations(const ArcStats& forward, const ArcStats& backward,
                                        const Real& T, double rel_tol = 0.05);

}  // namespace fgbfi
