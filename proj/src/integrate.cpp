#include "fgbfi/integrate.hpp"

#include <cmath>
#include <stdexcept>

namespace fgbfi {

void IntegrationConfig::validate() const {
  if (way != 1 && way != -1) throw std::invalid_argument("way must be +1 or -1");
  Real zero = Real::zero(ctx);
  if (!(delta > zero)) throw std::invalid_argument("delta must be positive");
  if (T < zero) throw std::invalid_argument("horizon T must be nonnegative");
  if (max_degree < 1) throw std::invalid_argument("max_degree must be at least 1");
  Real floor = Real::of(1000000, ctx) * ctx.machine_epsilon();
  if (!(eps_pw >= floor))
    throw std::invalid_argument(
        "eps_pw must be at least 1e6 * machine epsilon of the context (eps_m = 2^(1-b_m)); "
        "raise eps_pw or mantissa_bits");
  if (sched_dims < 0) throw std::invalid_argument("sched_dims must be nonnegative");
}

ArcCursor::ArcCursor(const QuadSystem& sys, const IntegrationConfig& cfg, const RVec& x0)
    : sys_(&sys),
      cfg_(cfg),
      engine_(sys, cfg.max_degree, cfg.tail_split),
      x_(x0),
      x_next_(make_vec(sys.dim(), cfg.ctx)),
      t_(Real::zero(cfg.ctx)),
      t_signed_(Real::zero(cfg.ctx)),
      t_prev_signed_(Real::zero(cfg.ctx)),
      dt_abs_(cfg.ctx),
      dt_signed_(cfg.ctx),
      h1_(cfg.ctx),
      h2_(cfg.ctx),
      tau_(cfg.ctx),
      rem_(cfg.ctx),
      scratch_(cfg.ctx),
      local_(cfg.ctx),
      one_(Real::of(1, cfg.ctx)),
      radius_sq_(sys.ball().radius * sys.ball().radius),
      ball_test_dims_(cfg.ball_dims > 0 ? cfg.ball_dims : sys.dim()),
      stats_(cfg.ctx) {
  cfg_.validate();
  if (static_cast<long>(x0.size()) != sys.dim())
    throw std::invalid_argument("x0 dimension mismatch");
  if (sys.precision() != cfg.ctx.mantissa_bits())
    throw PrecisionMismatch("system and integration context carry different precisions");
  for (const Real& c : x0)
    if (c.precision() != cfg.ctx.mantissa_bits())
      throw PrecisionMismatch("x0 and integration context carry different precisions");
  if (!sys.ball().contains(x0, cfg.ball_dims))
    throw std::invalid_argument("x0 lies outside the trapping ball");
  if (cfg_.T.is_zero()) done_ = true;
}

bool ArcCursor::advance() {
  if (done_) return false;
  const long n = sys_->dim();

  // Schedule: h1 for the convergence-step formula.
  if (cfg_.sched_dims > 0) {
    mpfr_set(h1_.raw(), cfg_.sched_pad.raw(), MPFR_RNDN);
    for (long i = 0; i < cfg_.sched_dims; ++i) {
      mpfr_abs(scratch_.raw(), x_[i].raw(), MPFR_RNDN);
      mpfr_add(h1_.raw(), h1_.raw(), scratch_.raw(), MPFR_RNDN);
    }
    // The padded bound is only valid while the tail block stays inside its
    // allowance (squared Euclidean test).
    mpfr_set_zero(local_.raw(), +1);
    for (long i = cfg_.sched_dims; i < n; ++i) {
      mpfr_mul(scratch_.raw(), x_[i].raw(), x_[i].raw(), MPFR_RNDN);
      mpfr_add(local_.raw(), local_.raw(), scratch_.raw(), MPFR_RNDN);
    }
    mpfr_mul(scratch_.raw(), cfg_.sched_pad_norm2.raw(), cfg_.sched_pad_norm2.raw(), MPFR_RNDN);
    if (mpfr_cmp(local_.raw(), scratch_.raw()) > 0)
      throw DegeneracyError(
          "perturbation block exceeded its scheduling allowance; decrease tau_M or raise b_m");
  } else {
    mpfr_set_zero(h1_.raw(), +1);
    for (long i = 0; i < n; ++i) {
      mpfr_abs(scratch_.raw(), x_[i].raw(), MPFR_RNDN);
      mpfr_add(h1_.raw(), h1_.raw(), scratch_.raw(), MPFR_RNDN);
    }
  }

  if (h1_ > one_) {
    // mu*h1*h1 + (|A| + 2mu)*h1, in the same op order as compute_bounds so
    // the cursor's step certificate agrees with the public bounds bit for bit
    mpfr_mul(h2_.raw(), sys_->mu().raw(), h1_.raw(), MPFR_RNDN);
    mpfr_mul(h2_.raw(), h2_.raw(), h1_.raw(), MPFR_RNDN);
    mpfr_add(scratch_.raw(), sys_->mu().raw(), sys_->mu().raw(), MPFR_RNDN);
    mpfr_add(scratch_.raw(), sys_->norm_a().raw(), scratch_.raw(), MPFR_RNDN);
    mpfr_mul(scratch_.raw(), scratch_.raw(), h1_.raw(), MPFR_RNDN);
    mpfr_add(h2_.raw(), h2_.raw(), scratch_.raw(), MPFR_RNDN);
  } else {
    mpfr_add(h2_.raw(), sys_->norm_a().raw(), sys_->mu().raw(), MPFR_RNDN);
  }
  mpfr_add(tau_.raw(), h2_.raw(), cfg_.delta.raw(), MPFR_RNDN);
  mpfr_ui_div(tau_.raw(), 1, tau_.raw(), MPFR_RNDN);

  mpfr_sub(rem_.raw(), cfg_.T.raw(), t_.raw(), MPFR_RNDN);
  bool last = false;
  if (mpfr_cmp(tau_.raw(), rem_.raw()) >= 0) {
    mpfr_set(dt_abs_.raw(), rem_.raw(), MPFR_RNDN);
    mpfr_set(t_.raw(), cfg_.T.raw(), MPFR_RNDN);
    last = true;
  } else {
    mpfr_set(dt_abs_.raw(), tau_.raw(), MPFR_RNDN);
    mpfr_add(scratch_.raw(), t_.raw(), dt_abs_.raw(), MPFR_RNDN);
    if (mpfr_cmp(scratch_.raw(), t_.raw()) == 0)
      throw TruncationFailure("integration step underflow: tau vanished at current precision");
    mpfr_set(t_.raw(), scratch_.raw(), MPFR_RNDN);
  }
  if (cfg_.way < 0)
    mpfr_neg(dt_signed_.raw(), dt_abs_.raw(), MPFR_RNDN);
  else
    mpfr_set(dt_signed_.raw(), dt_abs_.raw(), MPFR_RNDN);

  int degree = engine_.expand(x_, dt_signed_, cfg_.eps_pw);
  engine_.eval(dt_signed_, x_next_);

  ++index_;
  mpfr_set(t_prev_signed_.raw(), t_signed_.raw(), MPFR_RNDN);
  if (cfg_.way < 0)
    mpfr_neg(t_signed_.raw(), t_.raw(), MPFR_RNDN);
  else
    mpfr_set(t_signed_.raw(), t_.raw(), MPFR_RNDN);

  stats_.N = index_;
  if (degree > stats_.n_max) {
    stats_.n_max = degree;
    stats_.l_max = index_;
    stats_.t_at_nmax = t_signed_;
  }
  if (dt_abs_ > stats_.dt_max) {
    stats_.dt_max = dt_abs_;
    stats_.d_max = index_;
    stats_.t_at_dtmax = t_signed_;
  }

  std::swap(x_, x_next_);

  // Squared-distance ball test, allocation free.
  const RVec& center = sys_->ball().center;
  mpfr_set_zero(local_.raw(), +1);
  for (long i = 0; i < ball_test_dims_; ++i) {
    mpfr_sub(scratch_.raw(), x_[i].raw(), center[i].raw(), MPFR_RNDN);
    mpfr_mul(scratch_.raw(), scratch_.raw(), scratch_.raw(), MPFR_RNDN);
    mpfr_add(local_.raw(), local_.raw(), scratch_.raw(), MPFR_RNDN);
  }
  if (mpfr_cmp(local_.raw(), radius_sq_.raw()) > 0) {
    escaped_ = true;
    done_ = true;
    return true;
  }
  if (last) done_ = true;
  return true;
}

StepView ArcCursor::view() const {
  if (index_ == 0) throw std::logic_error("no step completed yet");
  return StepView{index_,  t_prev_signed_, t_signed_, dt_signed_,
                  engine_.degree(), engine_.coeffs(), x_};
}

void ArcCursor::eval_at(const Real& t_abs_signed, RVec& out) const {
  if (index_ == 0) throw std::logic_error("no step completed yet");
  Real local(cfg_.ctx);
  mpfr_sub(local.raw(), t_abs_signed.raw(), t_prev_signed_.raw(), MPFR_RNDN);
  engine_.eval(local, out);
}

TrajectoryArc integrate(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const StepCallback& on_step) {
  ArcCursor cur(sys, cfg, x0);
  TrajectoryArc arc(cfg.ctx);
  arc.way = cfg.way;
  while (cur.advance()) {
    StepView v = cur.view();
    if (cfg.keep_steps)
      arc.steps.push_back(StepRecord{v.t_start, v.t_end, v.dt, v.degree, v.endpoint});
    if (on_step) on_step(v);
  }
  arc.escaped_ball = cur.escaped();
  if (arc.escaped_ball) arc.diagnostic = kBallEscapeAdvice;
  arc.stats = cur.stats();
  arc.t_end = cur.t_signed();
  arc.endpoint = cur.state();
  return arc;
}

ForwardCheck verify_forward(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                            const Real& eps_a) {
  if (cfg.way != +1) throw std::invalid_argument("verify_forward requires way = +1");
  cfg.validate();
  const PrecisionContext& ctx = cfg.ctx;

  Real eps_sq = cfg.eps_pw * cfg.eps_pw;
  Real eps_scaled = cfg.eps_pw * parse_decimal("1e-5", ctx);
  Real tightened = max(eps_sq, eps_scaled);
  Real floor = Real::of(1000000, ctx) * ctx.machine_epsilon();
  if (tightened < floor)
    throw std::invalid_argument(
        "tightened tolerance falls below 1e6 * eps_m; raise mantissa_bits (b_m) to verify at "
        "this eps_pw");

  IntegrationConfig base = cfg;
  base.keep_steps = false;
  IntegrationConfig tight = base;
  tight.eps_pw = tightened;

  ForwardCheck out(ctx);
  out.eps_low = tightened;

  ArcCursor coarse(sys, base, x0);
  ArcCursor fine(sys, tight, x0);
  const long n = sys.dim();
  RVec a = make_vec(n, ctx);
  RVec b = make_vec(n, ctx);
  Real ts(ctx), frac(ctx), gap(ctx);
  Real eleven = Real::of(11, ctx);

  while (coarse.advance()) {
    StepView v = coarse.view();
    for (int i = 1; i <= 11; ++i) {
      if (i < 11) {
        // interior sample t_start + i*dt/11
        mpfr_mul_ui(frac.raw(), v.dt.raw(), static_cast<unsigned long>(i), MPFR_RNDN);
        mpfr_div(frac.raw(), frac.raw(), eleven.raw(), MPFR_RNDN);
        mpfr_add(ts.raw(), v.t_start.raw(), frac.raw(), MPFR_RNDN);
      } else {
        mpfr_set(ts.raw(), v.t_end.raw(), MPFR_RNDN);
      }
      while (!fine.done() && fine.t_signed() < ts) fine.advance();
      if (fine.escaped()) {
        out.pass = false;
        out.note = "tightened run left the trapping ball";
        return out;
      }
      coarse.eval_at(ts, a);
      fine.eval_at(ts, b);
      mpfr_set_zero(gap.raw(), +1);
      for (long c = 0; c < n; ++c) {
        mpfr_sub(frac.raw(), a[c].raw(), b[c].raw(), MPFR_RNDN);
        mpfr_abs(frac.raw(), frac.raw(), MPFR_RNDN);
        mpfr_add(gap.raw(), gap.raw(), frac.raw(), MPFR_RNDN);
      }
      if (gap > out.delta_a) out.delta_a = gap;
    }
    if (coarse.escaped()) {
      out.pass = false;
      out.note = "run left the trapping ball";
      return out;
    }
  }
  out.pass = out.delta_a < eps_a;
  return out;
}

BackwardCheck verify_backward(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                              const Real& eps_R) {
  if (cfg.way != +1) throw std::invalid_argument("verify_backward requires way = +1");
  const PrecisionContext& ctx = cfg.ctx;
  BackwardCheck out(ctx);

  IntegrationConfig fcfg = cfg;
  fcfg.keep_steps = false;
  TrajectoryArc fwd = integrate(sys, x0, fcfg);
  out.forward_stats = fwd.stats;
  out.forward_endpoint = fwd.endpoint;
  if (fwd.escaped_ball) {
    out.pass = false;
    mpfr_set_inf(out.return_distance.raw(), +1);
    out.note = std::string("forward run left the trapping ball. ") + kBallEscapeAdvice;
    return out;
  }

  IntegrationConfig bcfg = fcfg;
  bcfg.way = -1;
  TrajectoryArc bwd = integrate(sys, fwd.endpoint, bcfg);
  out.backward_stats = bwd.stats;
  out.backward_escaped = bwd.escaped_ball;
  if (bwd.escaped_ball) {
    out.pass = false;
    mpfr_set_inf(out.return_distance.raw(), +1);
    out.note = std::string("backward run left the trapping ball (insufficient precision near "
                           "the attractor). ") +
               kBallEscapeAdvice;
    return out;
  }

  Real gap(ctx), acc = Real::zero(ctx);
  for (long c = 0; c < sys.dim(); ++c) {
    mpfr_sub(gap.raw(), bwd.endpoint[c].raw(), x0[c].raw(), MPFR_RNDN);
    mpfr_abs(gap.raw(), gap.raw(), MPFR_RNDN);
    mpfr_add(acc.raw(), acc.raw(), gap.raw(), MPFR_RNDN);
  }
  out.return_distance = acc;
  out.pass = out.return_distance < eps_R;
  return out;
}

namespace {

ConfigCheck make_check(const std::string& name, double lhs, double rhs, double rel_tol) {
  ConfigCheck c;
  c.name = name;
  c.lhs = lhs;
  c.rhs = rhs;
  double denom = std::max(std::abs(lhs), std::abs(rhs));
  c.rel_err = denom == 0.0 ? 0.0 : std::abs(lhs - rhs) / denom;
  c.pass = c.rel_err <= rel_tol;
  return c;
}

}  // namespace

ConfigComparison compare_configurations(const ArcStats& forward, const ArcStats& backward,
                                        const Real& T, double rel_tol) {
  ConfigComparison rep;
  double t = T.to_double();
  rep.checks.push_back(make_check("step count N vs N_hat", static_cast<double>(forward.N),
                                  static_cast<double>(backward.N), rel_tol));
  rep.checks.push_back(make_check("max degree n_max fwd vs bwd",
                                  static_cast<double>(forward.n_max),
                                  static_cast<double>(backward.n_max), rel_tol));
  rep.checks.push_back(make_check("t at max degree: t_fwd + |t_bwd| vs T",
                                  forward.t_at_nmax.to_double() +
                                      std::abs(backward.t_at_nmax.to_double()),
                                  t, rel_tol));
  rep.checks.push_back(make_check("t at max step: t_fwd + |t_bwd| vs T",
                                  forward.t_at_dtmax.to_double() +
                                      std::abs(backward.t_at_dtmax.to_double()),
                                  t, rel_tol));
  rep.all_pass = true;
  for (const ConfigCheck& c : rep.checks) rep.all_pass = rep.all_pass && c.pass;
  rep.informational = "paper-form check (informational): d_max{+1} + d_max{-1} = " +
                      std::to_string(forward.d_max + backward.d_max) +
                      " vs N = " + std::to_string(forward.N);
  return rep;
}

}  // namespace fgbfi
