#include "fgbfi/recurrence.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>

#include "fgbfi/parallel.hpp"

namespace fgbfi {

GridStep GridStep::parse(std::string_view text) {
  size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  std::string_view s = text.substr(b, e - b);
  if (s.empty()) throw ParseError("empty grid step");
  size_t i = 0;
  if (s[i] == '+') ++i;
  if (i < s.size() && s[i] == '-')
    throw ParseError("grid step must be positive: '" + std::string(s) + "'");

  std::string digits;
  long frac_len = 0;
  bool seen_digit = false;
  for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
    digits += s[i];
    seen_digit = true;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
      digits += s[i];
      ++frac_len;
      seen_digit = true;
    }
  }
  long exp_part = 0;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = (s[i++] == '-');
    bool any = false;
    long v = 0;
    for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i) {
      v = v * 10 + (s[i] - '0');
      any = true;
      if (v > 1000000) throw ParseError("grid step exponent out of range");
    }
    if (!any) throw ParseError("malformed grid step exponent: '" + std::string(s) + "'");
    exp_part = neg ? -v : v;
  }
  if (i != s.size() || !seen_digit)
    throw ParseError("malformed grid step: '" + std::string(s) + "'");

  long exp10 = frac_len - exp_part;
  size_t first = digits.find_first_not_of('0');
  if (first == std::string::npos) throw ParseError("grid step must be nonzero");
  digits.erase(0, first);
  while (digits.size() > 1 && digits.back() == '0' && exp10 > 0) {
    digits.pop_back();
    --exp10;
  }
  while (exp10 < 0) {
    digits += '0';
    ++exp10;
  }
  if (digits.size() > 18)
    throw ParseError("grid step carries too many significant digits (max 18)");
  unsigned long long mant = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), mant);
  if (ec != std::errc{} || p != digits.data() + digits.size())
    throw ParseError("malformed grid step: '" + std::string(s) + "'");
  if (exp10 > 10000) throw ParseError("grid step exponent out of range");
  return GridStep{mant, static_cast<int>(exp10)};
}

Real GridStep::value(const PrecisionContext& ctx) const {
  GridClock clock(*this, ctx);
  Real out(ctx);
  clock.time_at(1, out);
  return out;
}

std::string GridStep::str() const {
  return std::to_string(mant) + "e-" + std::to_string(exp10);
}

GridClock::GridClock(const GridStep& step, const PrecisionContext& ctx)
    : step_(step),
      num_(static_cast<mpfr_prec_t>(96)),
      den_(static_cast<mpfr_prec_t>(std::max(64L, static_cast<long>(step.exp10) * 4 + 8))) {
  if (step_.mant == 0) throw std::invalid_argument("grid step must be nonzero");
  mpfr_ui_pow_ui(den_.raw(), 10, static_cast<unsigned long>(step_.exp10), MPFR_RNDN);
  (void)ctx;
}

void GridClock::time_at(unsigned long long k, Real& out) {
  if (k > max_index()) throw std::invalid_argument("grid index overflows the exact clock");
  mpfr_set_ui(num_.raw(), static_cast<unsigned long>(k * step_.mant), MPFR_RNDN);  // exact
  mpfr_div(out.raw(), num_.raw(), den_.raw(), MPFR_RNDN);  // one rounding, at out's precision
}

unsigned long long GridClock::max_index() const {
  return static_cast<unsigned long long>(-1) / step_.mant;
}

unsigned long long grid_point_count(const GridStep& dt_P, const GridStep& T_P) {
  unsigned __int128 num = T_P.mant;
  unsigned __int128 den = dt_P.mant;
  const unsigned __int128 limit = (~static_cast<unsigned __int128>(0)) / 16;
  int shift = dt_P.exp10 - T_P.exp10;
  for (int i = 0; i < shift; ++i) {
    if (num > limit) throw std::invalid_argument("grid too fine relative to the horizon");
    num *= 10;
  }
  for (int i = 0; i < -shift; ++i) {
    if (den > limit) throw std::invalid_argument("grid step too coarse to represent");
    den *= 10;
  }
  unsigned __int128 q = num / den;
  if (q < 1) throw std::invalid_argument("dt_P must be smaller than T_P");
  if (q > (static_cast<unsigned __int128>(1) << 52))
    throw std::invalid_argument("grid has too many points");
  return static_cast<unsigned long long>(q);
}

namespace {

// Euclidean distance with a fixed op order so the streaming path and the
// table path agree bit for bit.
void dist_to(const RVec& x, const RVec& ref, Real& acc, Real& t) {
  mpfr_set_zero(acc.raw(), +1);
  for (size_t c = 0; c < x.size(); ++c) {
    mpfr_sub(t.raw(), x[c].raw(), ref[c].raw(), MPFR_RNDN);
    mpfr_mul(t.raw(), t.raw(), t.raw(), MPFR_RNDN);
    mpfr_add(acc.raw(), acc.raw(), t.raw(), MPFR_RNDN);
  }
  mpfr_sqrt(acc.raw(), acc.raw(), MPFR_RNDN);
}

struct StepSnap {
  Real t_start;
  std::vector<RVec> coeffs;
  int degree = 0;

  explicit StepSnap(const PrecisionContext& ctx) : t_start(ctx) {}
};

long acquire_snap(std::vector<StepSnap>& pool, size_t& used, const StepView& v, long n,
                  const PrecisionContext& ctx) {
  if (used == pool.size()) pool.emplace_back(ctx);
  StepSnap& s = pool[used];
  s.degree = v.degree;
  while (s.coeffs.size() < static_cast<size_t>(v.degree) + 1)
    s.coeffs.push_back(make_vec(n, ctx));
  for (int r = 0; r <= v.degree; ++r) copy_into(s.coeffs[static_cast<size_t>(r)], v.coeffs[r]);
  mpfr_set(s.t_start.raw(), v.t_start.raw(), MPFR_RNDN);
  return static_cast<long>(used++);
}

void eval_snap(const StepSnap& s, const Real& t_abs, RVec& out, Real& local) {
  mpfr_sub(local.raw(), t_abs.raw(), s.t_start.raw(), MPFR_RNDN);
  const long n = static_cast<long>(out.size());
  for (long c = 0; c < n; ++c) {
    mpfr_set(out[c].raw(), s.coeffs[static_cast<size_t>(s.degree)][c].raw(), MPFR_RNDN);
    for (long i = s.degree - 1; i >= 0; --i) {
      mpfr_mul(out[c].raw(), out[c].raw(), local.raw(), MPFR_RNDN);
      mpfr_add(out[c].raw(), out[c].raw(), s.coeffs[static_cast<size_t>(i)][c].raw(), MPFR_RNDN);
    }
  }
}

using BlockSink = std::function<void(unsigned long long k0, size_t count,
                                     const std::vector<Real>& ts, const std::vector<RVec>& xs,
                                     const std::vector<Real>& ds)>;

// Dense-output walk over the uniform grid. Sample blocks evaluate in
// parallel; blocks reach the sink serially in k order. When ref is set,
// ds[i] carries |X_k - ref|_2. Returns true if the trajectory escaped the
// ball before covering the grid (the sink then saw a truncated walk).
bool walk_grid(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
               const RecurrenceScanConfig& scan, const RVec* ref, const BlockSink& on_block) {
  const PrecisionContext& ctx = cfg.ctx;
  const long n = sys.dim();
  const unsigned long long NP = grid_point_count(scan.dt_P, scan.T_P);
  GridClock clock(scan.dt_P, ctx);
  if (NP >= clock.max_index()) throw std::invalid_argument("grid too fine: index overflow");

  IntegrationConfig icfg = cfg;
  icfg.T = scan.T_P.value(ctx);
  icfg.way = +1;
  icfg.keep_steps = false;
  ArcCursor cur(sys, icfg, x0);

  const size_t B = 8192;
  const int nthreads = par::resolve(scan.threads);
  std::vector<Real> ts(B, Real(ctx));
  std::vector<RVec> xs;
  xs.reserve(B);
  for (size_t i = 0; i < B; ++i) xs.push_back(make_vec(n, ctx));
  std::vector<Real> ds(B, Real(ctx));
  std::vector<long> slots(B, -1);
  std::vector<StepSnap> pool;
  size_t pool_used = 0;
  struct Scratch {
    Real local, tmp;
    explicit Scratch(const PrecisionContext& c) : local(c), tmp(c) {}
  };
  std::vector<Scratch> scratch;
  scratch.reserve(static_cast<size_t>(nthreads));
  for (int i = 0; i < nthreads; ++i) scratch.emplace_back(ctx);

  unsigned long long k = 0;
  bool escaped = false;
  while (k <= NP && !escaped) {
    size_t want = static_cast<size_t>(std::min<unsigned long long>(B, NP - k + 1));
    pool_used = 0;
    long cur_snap = -1;
    size_t count = 0;
    for (size_t i = 0; i < want; ++i) {
      unsigned long long kk = k + i;
      clock.time_at(kk, ts[i]);
      if (kk == 0) {
        slots[i] = -1;
        ++count;
        continue;
      }
      while (!cur.done() && cur.t_signed() < ts[i]) {
        cur.advance();
        cur_snap = -1;
      }
      if (cur.escaped() && cur.t_signed() < ts[i]) {
        escaped = true;
        break;
      }
      if (cur_snap < 0) cur_snap = acquire_snap(pool, pool_used, cur.view(), n, ctx);
      slots[i] = cur_snap;
      ++count;
    }
    if (count > 0) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nthreads) if (nthreads > 1 && count > 64)
#endif
      for (long i = 0; i < static_cast<long>(count); ++i) {
        size_t ii = static_cast<size_t>(i);
        Scratch& sc = scratch[static_cast<size_t>(par::thread_id())];
        if (slots[ii] < 0) {
          copy_into(xs[ii], x0);
        } else {
          eval_snap(pool[static_cast<size_t>(slots[ii])], ts[ii], xs[ii], sc.local);
        }
        if (ref) dist_to(xs[ii], *ref, ds[ii], sc.tmp);
      }
      on_block(k, count, ts, xs, ds);
    }
    k += count;
    if (count == 0) break;
  }
  return escaped;
}

// Three-sample rapprochement window, shared by both detectors.
class Predicate {
 public:
  Predicate(const Real& threshold, std::vector<RecurrenceEvent>& out, const PrecisionContext& ctx)
      : thr_(threshold), out_(out), d1_(ctx), d2_(ctx), t1_(ctx) {}

  void feed(unsigned long long k, const Real& t, const Real& d) {
    if (have2_) {
      // event at the middle sample: d2 > d1 & d1 < d & d1 < threshold
      if (d2_ > d1_ && d1_ < d && d1_ < thr_) out_.push_back({k1_, t1_, d1_});
    }
    if (have1_) {
      d2_ = d1_;
      have2_ = true;
    }
    d1_ = d;
    t1_ = t;
    k1_ = k;
    have1_ = true;
  }

 private:
  const Real& thr_;
  std::vector<RecurrenceEvent>& out_;
  Real d1_, d2_, t1_;
  unsigned long long k1_ = 0;
  bool have1_ = false, have2_ = false;
};

}  // namespace

SampleTable sample_grid(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const RecurrenceScanConfig& scan) {
  SampleTable table;
  table.escaped = walk_grid(sys, x0, cfg, scan, nullptr,
                            [&](unsigned long long, size_t count, const std::vector<Real>& ts,
                                const std::vector<RVec>& xs, const std::vector<Real>&) {
                              for (size_t i = 0; i < count; ++i) {
                                table.t.push_back(ts[i]);
                                table.x.push_back(xs[i]);
                              }
                            });
  return table;
}

bool stream_grid(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                 const RecurrenceScanConfig& scan,
                 const std::function<void(unsigned long long, const Real&, const RVec&)>&
                     on_sample) {
  return walk_grid(sys, x0, cfg, scan, nullptr,
                   [&](unsigned long long k0, size_t count, const std::vector<Real>& ts,
                       const std::vector<RVec>& xs, const std::vector<Real>&) {
                     for (size_t i = 0; i < count; ++i) on_sample(k0 + i, ts[i], xs[i]);
                   });
}

std::vector<RecurrenceEvent> scan_recurrences(const SampleTable& table, const Real& threshold) {
  std::vector<RecurrenceEvent> events;
  if (table.x.size() < 3) return events;
  PrecisionContext ctx(table.t[0].precision());
  Predicate pred(threshold, events, ctx);
  Real d(ctx), tmp(ctx);
  const RVec& ref = table.x[0];
  for (size_t k = 0; k < table.x.size(); ++k) {
    dist_to(table.x[k], ref, d, tmp);
    pred.feed(k, table.t[k], d);
  }
  return events;
}

ScanResult scan_trajectory(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                           const RecurrenceScanConfig& scan) {
  ScanResult res;
  res.n_points = grid_point_count(scan.dt_P, scan.T_P);
  Predicate pred(scan.threshold, res.events, cfg.ctx);
  res.escaped = walk_grid(sys, x0, cfg, scan, &x0,
                          [&](unsigned long long k0, size_t count, const std::vector<Real>& ts,
                              const std::vector<RVec>&, const std::vector<Real>& ds) {
                            for (size_t i = 0; i < count; ++i) pred.feed(k0 + i, ts[i], ds[i]);
                          });
  return res;
}

ReturnStats return_statistics(std::vector<RecurrenceEvent> events, double regularity_cv) {
  ReturnStats st;
  st.events = std::move(events);
  if (st.events.size() < 2) return st;
  PrecisionContext ctx(st.events[0].t_star.precision());
  const size_t m = st.events.size() - 1;
  st.intervals.reserve(m);
  Real sum = Real::zero(ctx);
  for (size_t i = 0; i + 1 < st.events.size(); ++i) {
    st.intervals.push_back(st.events[i + 1].t_star - st.events[i].t_star);
    sum += st.intervals.back();
  }
  Real mean = sum / Real::of(static_cast<long>(m), ctx);
  Real var = Real::zero(ctx);
  for (const Real& iv : st.intervals) {
    Real d = iv - mean;
    var += d * d;
  }
  var /= Real::of(static_cast<long>(m), ctx);
  Real sd = sqrt(var);
  st.mean_interval = mean;
  st.stddev_interval = sd;
  Real cv(ctx);
  mpfr_set_d(cv.raw(), regularity_cv, MPFR_RNDN);
  if (mean > Real::zero(ctx) && sd < cv * mean) st.period_estimate = mean;
  return st;
}

RefinedScan refine_scan(const QuadSystem& sys, const RVec& x0, const IntegrationConfig& cfg,
                        const RecurrenceScanConfig& scan) {
  const PrecisionContext& ctx = cfg.ctx;
  Real floor =
      Real::of(10, ctx) * ctx.machine_epsilon() * max(scan.T_P.value(ctx), Real::of(1, ctx));
  if (!(scan.dt_P.value(ctx) > floor))
    throw std::invalid_argument("dt_P is already at the working-precision time resolution");
  if (scan.max_refine_levels < 1) throw std::invalid_argument("max_refine_levels must be >= 1");

  RefinedScan out;
  GridStep dt = scan.dt_P;
  std::optional<Real> prev_min;
  bool have_prev = false;
  std::vector<RecurrenceEvent> last_events;

  for (int level = 0;; ++level) {
    RecurrenceScanConfig level_scan = scan;
    level_scan.dt_P = dt;
    ScanResult r = scan_trajectory(sys, x0, cfg, level_scan);
    std::optional<Real> min_d;
    for (const RecurrenceEvent& ev : r.events)
      if (!min_d || ev.d_star < *min_d) min_d = ev.d_star;
    out.trail.push_back({dt, r.events.size(), min_d});
    last_events = std::move(r.events);
    out.final_dt = dt;

    if (have_prev) {
      bool converged = false;
      if (!prev_min && !min_d) {
        converged = true;  // refinement of an empty scan stays empty
      } else if (prev_min && min_d) {
        Real change = abs(*prev_min - *min_d);
        Real tol(ctx);
        mpfr_set_d(tol.raw(), 0.10, MPFR_RNDN);
        converged = change < tol * (*prev_min);
      }
      if (converged) break;
    }
    if (level + 1 >= scan.max_refine_levels) {
      out.hit_level_cap = true;
      break;
    }
    GridStep next = dt.refined();
    if (!(next.value(ctx) > floor)) {
      out.hit_floor = true;
      break;
    }
    prev_min = min_d;
    have_prev = true;
    dt = next;
  }
  out.stats = return_statistics(std::move(last_events));
  return out;
}

}  // namespace fgbfi
