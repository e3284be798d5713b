// Command-line front end: certified power-series integration of quadratic
// ODE systems, forward/backward accuracy verification, recurrence scanning,
// and Lyapunov spectra, with provenance-stamped reproducible outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>

#include "fgbfi/io.hpp"
#include "fgbfi/lyapunov.hpp"
#include "fgbfi/manifest.hpp"
#include "fgbfi/recurrence.hpp"

using namespace fgbfi;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitBallEscape = 3;
constexpr int kExitTruncation = 4;
constexpr int kExitDegeneracy = 5;

struct CommonArgs {
  std::string system;
  std::string x0;
  long bm = 128;
  std::string eps_pw = "1e-20";
  std::string delta = "1e-3";
  int max_degree = 1000;
  int threads = 0;
  std::string out = "fgbfi_out";
};

long default_bm() {
  if (const char* env = std::getenv("FGBFI_BM")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= PrecisionContext::kMinMantissaBits) return v;
    std::cerr << "warning: ignoring invalid FGBFI_BM='" << env << "'\n";
  }
  return 128;
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--system", a.system, "system-definition JSON file")->required();
  cmd->add_option("--x0", a.x0, "start state, comma-separated decimals")->required();
  cmd->add_option("--bm", a.bm, "mantissa bits b_m (default: FGBFI_BM or 128)");
  cmd->add_option("--eps-pw", a.eps_pw, "series tail tolerance eps_pw")->capture_default_str();
  cmd->add_option("--delta", a.delta, "convergence-step slack delta")->capture_default_str();
  cmd->add_option("--max-degree", a.max_degree, "series degree guard")->capture_default_str();
  cmd->add_option("--threads", a.threads, "parallelism (0 = all cores)")->capture_default_str();
  cmd->add_option("--out", a.out, "output file prefix")->capture_default_str();
}

RVec parse_x0(const std::string& text, long n, const PrecisionContext& ctx) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (static_cast<long>(parts.size()) != n)
    throw std::invalid_argument("--x0 must carry " + std::to_string(n) + " components, got " +
                                std::to_string(parts.size()));
  return parse_vec(parts, ctx);
}

void common_params(const CommonArgs& a, std::map<std::string, std::string>& p) {
  p["x0"] = a.x0;
  p["bm"] = std::to_string(a.bm);
  p["eps_pw"] = a.eps_pw;
  p["delta"] = a.delta;
  p["max_degree"] = std::to_string(a.max_degree);
  p["threads"] = std::to_string(a.threads);
  p["out"] = a.out;
}

void common_from_params(const std::map<std::string, std::string>& p, CommonArgs& a) {
  a.x0 = p.at("x0");
  a.bm = std::stol(p.at("bm"));
  a.eps_pw = p.at("eps_pw");
  a.delta = p.at("delta");
  a.max_degree = std::stoi(p.at("max_degree"));
  a.threads = std::stoi(p.at("threads"));
  a.out = p.at("out");
}

void write_manifest(const std::string& command, const CommonArgs& a,
                    std::map<std::string, std::string> params) {
  RunManifest m;
  m.command = command;
  m.system_path = a.system;
  m.system_sha256 = sha256_hex(read_file(a.system));
  common_params(a, params);
  m.params = std::move(params);
  m.created = iso8601_now();
  m.save(a.out + "_manifest.json");
}

std::string csv_row(const Real& t, const RVec& x) {
  std::string row = format_decimal(t);
  for (const Real& c : x) {
    row += ',';
    row += format_decimal(c);
  }
  row += '\n';
  return row;
}

std::string csv_header(long n) {
  std::string h = "t";
  for (long i = 1; i <= n; ++i) h += ",x" + std::to_string(i);
  h += '\n';
  return h;
}

ordered_json stats_json(const ArcStats& st) {
  ordered_json j;
  j["N"] = st.N;
  j["n_max"] = st.n_max;
  j["l_max"] = st.l_max;
  j["dt_max"] = format_decimal(st.dt_max);
  j["d_max"] = st.d_max;
  j["t_at_nmax"] = format_decimal(st.t_at_nmax);
  j["t_at_dtmax"] = format_decimal(st.t_at_dtmax);
  return j;
}

// ---------------------------------------------------------------- integrate

struct IntegrateArgs {
  CommonArgs common;
  std::string T;
  int way = 1;
  std::string grid;  // optional uniform resample step
  long stride = 1;
};

int run_integrate(const IntegrateArgs& a) {
  PrecisionContext ctx = make_context(a.common.bm);
  QuadSystem sys = load_system(a.common.system, ctx);
  RVec x0 = parse_x0(a.common.x0, sys.dim(), ctx);
  IntegrationConfig cfg(ctx, parse_decimal(a.common.eps_pw, ctx),
                        parse_decimal(a.common.delta, ctx), parse_decimal(a.T, ctx), a.way);
  cfg.max_degree = a.common.max_degree;
  cfg.validate();

  AtomicFile csv(a.common.out + ".csv");
  csv.write(csv_header(sys.dim()));
  csv.write(csv_row(Real::zero(ctx), x0));
  long stride = a.stride < 1 ? 1 : a.stride;
  std::string pending;
  TrajectoryArc arc = integrate(sys, x0, cfg, [&](const StepView& v) {
    if (v.index % stride == 0) {
      csv.write(csv_row(v.t_end, v.endpoint));
      pending.clear();
    } else {
      pending = csv_row(v.t_end, v.endpoint);
    }
  });
  if (!pending.empty()) csv.write(pending);  // always land the final row
  csv.commit();

  if (!a.grid.empty()) {
    if (a.way != 1) throw std::invalid_argument("--grid requires a forward run");
    RecurrenceScanConfig scan(GridStep::parse(a.grid), GridStep::parse(a.T), ctx);
    scan.threads = a.common.threads;
    AtomicFile gcsv(a.common.out + "_grid.csv");
    gcsv.write(csv_header(sys.dim()));
    stream_grid(sys, x0, cfg, scan, [&](unsigned long long, const Real& t, const RVec& x) {
      gcsv.write(csv_row(t, x));
    });
    gcsv.commit();
  }

  ordered_json st = stats_json(arc.stats);
  st["way"] = arc.way;
  st["T"] = a.T;
  st["t_end"] = format_decimal(arc.t_end);
  st["escaped_ball"] = arc.escaped_ball;
  if (arc.escaped_ball) st["diagnostic"] = arc.diagnostic;
  ordered_json endpoint = ordered_json::array();
  for (const Real& c : arc.endpoint) endpoint.push_back(format_decimal(c));
  st["endpoint"] = std::move(endpoint);
  write_file_atomic(a.common.out + "_stats.json", st.dump(2) + "\n");

  std::map<std::string, std::string> params{{"T", a.T},
                                            {"way", std::to_string(a.way)},
                                            {"grid", a.grid},
                                            {"stride", std::to_string(stride)}};
  write_manifest("integrate", a.common, std::move(params));

  std::cout << "steps: " << arc.stats.N << "  max degree: " << arc.stats.n_max
            << "  max step: " << format_decimal(arc.stats.dt_max) << "\n";
  std::cout << "endpoint at t = " << format_decimal(arc.t_end) << ":\n";
  for (long i = 0; i < sys.dim(); ++i)
    std::cout << "  x" << (i + 1) << " = " << format_decimal(arc.endpoint[i]) << "\n";
  if (arc.escaped_ball) {
    std::cout << "trajectory left the trapping ball: " << arc.diagnostic << "\n";
    return kExitBallEscape;
  }
  return kExitOk;
}

// ------------------------------------------------------------------- verify

struct VerifyArgs {
  CommonArgs common;
  std::string T;
  std::string eps_a = "1e-12";
  std::string eps_R = "1e-10";
  double rel_tol = 0.05;
};

int run_verify(const VerifyArgs& a) {
  PrecisionContext ctx = make_context(a.common.bm);
  QuadSystem sys = load_system(a.common.system, ctx);
  RVec x0 = parse_x0(a.common.x0, sys.dim(), ctx);
  IntegrationConfig cfg(ctx, parse_decimal(a.common.eps_pw, ctx),
                        parse_decimal(a.common.delta, ctx), parse_decimal(a.T, ctx), +1);
  cfg.max_degree = a.common.max_degree;
  cfg.validate();

  ForwardCheck fwd = verify_forward(sys, x0, cfg, parse_decimal(a.eps_a, ctx));
  BackwardCheck bwd = verify_backward(sys, x0, cfg, parse_decimal(a.eps_R, ctx));
  ConfigComparison cmp =
      compare_configurations(bwd.forward_stats, bwd.backward_stats, cfg.T, a.rel_tol);

  ordered_json rep;
  rep["forward"] = {{"pass", fwd.pass},
                    {"delta_a", format_decimal(fwd.delta_a)},
                    {"eps_a", a.eps_a},
                    {"eps_tightened", format_decimal(fwd.eps_low)},
                    {"note", fwd.note}};
  rep["backward"] = {{"pass", bwd.pass},
                     {"return_distance", format_decimal(bwd.return_distance)},
                     {"eps_R", a.eps_R},
                     {"backward_escaped", bwd.backward_escaped},
                     {"note", bwd.note},
                     {"forward_stats", stats_json(bwd.forward_stats)},
                     {"backward_stats", stats_json(bwd.backward_stats)}};
  ordered_json checks = ordered_json::array();
  for (const ConfigCheck& c : cmp.checks)
    checks.push_back({{"name", c.name},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"rel_err", c.rel_err},
                      {"pass", c.pass}});
  rep["configuration"] = {{"rel_tol", a.rel_tol},
                          {"checks", std::move(checks)},
                          {"all_pass", cmp.all_pass},
                          {"informational", cmp.informational}};
  bool all = fwd.pass && bwd.pass && cmp.all_pass;
  rep["all_pass"] = all;
  write_file_atomic(a.common.out + "_report.json", rep.dump(2) + "\n");

  std::map<std::string, std::string> params{{"T", a.T},
                                            {"eps_a", a.eps_a},
                                            {"eps_R", a.eps_R},
                                            {"rel_tol", std::to_string(a.rel_tol)}};
  write_manifest("verify", a.common, std::move(params));

  std::cout << "criterion 1 (forward refinement): " << (fwd.pass ? "pass" : "FAIL")
            << "  delta_a = " << format_decimal(fwd.delta_a) << "\n";
  std::cout << "criterion 2 (backward return):    " << (bwd.pass ? "pass" : "FAIL")
            << "  distance = " << format_decimal(bwd.return_distance) << "\n";
  std::cout << "criterion 3 (configurations):     " << (cmp.all_pass ? "pass" : "FAIL") << "\n";
  for (const ConfigCheck& c : cmp.checks)
    std::cout << "    " << (c.pass ? "pass" : "FAIL") << "  " << c.name << " (" << c.lhs
              << " vs " << c.rhs << ")\n";
  std::cout << "    " << cmp.informational << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- recur

struct RecurArgs {
  CommonArgs common;
  std::string TP;
  std::string dtP;
  std::string reach_T = "0";
  std::string threshold = "1";
  bool refine = false;
  int refine_max = 4;
};

int run_recur(const RecurArgs& a) {
  PrecisionContext ctx = make_context(a.common.bm);
  QuadSystem sys = load_system(a.common.system, ctx);
  RVec x0 = parse_x0(a.common.x0, sys.dim(), ctx);
  IntegrationConfig cfg(ctx, parse_decimal(a.common.eps_pw, ctx),
                        parse_decimal(a.common.delta, ctx), Real::of(1, ctx), +1);
  cfg.max_degree = a.common.max_degree;

  RVec start = x0;
  Real reach = parse_decimal(a.reach_T, ctx);
  if (reach > Real::zero(ctx)) {
    IntegrationConfig rcfg = cfg;
    rcfg.T = reach;
    rcfg.validate();
    TrajectoryArc arc = integrate(sys, x0, rcfg);
    if (arc.escaped_ball) {
      std::cerr << "reach run left the trapping ball: " << arc.diagnostic << "\n";
      return kExitBallEscape;
    }
    start = arc.endpoint;
    std::cout << "scan start (after reach T = " << a.reach_T << "):\n";
    for (long i = 0; i < sys.dim(); ++i)
      std::cout << "  x" << (i + 1) << " = " << format_decimal(start[i]) << "\n";
  }

  RecurrenceScanConfig scan(GridStep::parse(a.dtP), GridStep::parse(a.TP), ctx);
  scan.threshold = parse_decimal(a.threshold, ctx);
  scan.threads = a.common.threads;
  scan.max_refine_levels = a.refine_max;

  ReturnStats stats;
  bool escaped = false;
  ordered_json trail = ordered_json::array();
  std::string final_dt = GridStep::parse(a.dtP).str();
  if (a.refine) {
    RefinedScan r = refine_scan(sys, start, cfg, scan);
    stats = std::move(r.stats);
    for (const RefinementLevel& lv : r.trail)
      trail.push_back({{"dt_P", lv.dt.str()},
                       {"events", lv.n_events},
                       {"min_d", lv.min_d ? format_decimal(*lv.min_d) : ""}});
    final_dt = r.final_dt.str();
    if (r.hit_floor) std::cout << "refinement stopped at the precision floor\n";
    if (r.hit_level_cap) std::cout << "refinement stopped at the level cap\n";
  } else {
    ScanResult r = scan_trajectory(sys, start, cfg, scan);
    escaped = r.escaped;
    stats = return_statistics(std::move(r.events));
  }

  AtomicFile csv(a.common.out + "_recurrences.csv");
  csv.write("k,t_star,d_star\n");
  for (const RecurrenceEvent& ev : stats.events) {
    std::string row = std::to_string(ev.k_star);
    row += ',';
    row += format_decimal(ev.t_star);
    row += ',';
    row += format_decimal(ev.d_star);
    row += '\n';
    csv.write(row);
  }
  csv.commit();

  ordered_json st;
  st["events"] = stats.events.size();
  st["dt_P"] = final_dt;
  st["T_P"] = a.TP;
  st["threshold"] = a.threshold;
  st["escaped"] = escaped;
  st["mean_interval"] = stats.mean_interval ? format_decimal(*stats.mean_interval) : "";
  st["stddev_interval"] = stats.stddev_interval ? format_decimal(*stats.stddev_interval) : "";
  if (stats.period_estimate)
    st["period_estimate"] = format_decimal(*stats.period_estimate);
  else
    st["period_estimate"] = nullptr;
  if (a.refine) st["refinement"] = std::move(trail);
  write_file_atomic(a.common.out + "_stats.json", st.dump(2) + "\n");

  std::map<std::string, std::string> params{{"TP", a.TP},
                                            {"dtP", a.dtP},
                                            {"reach_T", a.reach_T},
                                            {"threshold", a.threshold},
                                            {"refine", a.refine ? "1" : "0"},
                                            {"refine_max", std::to_string(a.refine_max)}};
  write_manifest("recur", a.common, std::move(params));

  std::cout << "events: " << stats.events.size() << "\n";
  if (stats.period_estimate)
    std::cout << "period estimate: " << format_decimal(*stats.period_estimate) << "\n";
  else if (stats.mean_interval)
    std::cout << "returns are irregular (no period estimate); mean interval "
              << format_decimal(*stats.mean_interval) << "\n";
  else
    std::cout << "too few events for interval statistics\n";
  if (escaped) {
    std::cout << "scan truncated: trajectory left the trapping ball\n";
    return kExitBallEscape;
  }
  return kExitOk;
}

// ----------------------------------------------------------------- lyapunov

struct LyapArgs {
  CommonArgs common;
  std::string T;
  long M = 0;
  unsigned long seed = 1;
};

int run_lyapunov(const LyapArgs& a) {
  PrecisionContext ctx = make_context(a.common.bm);
  QuadSystem sys = load_system(a.common.system, ctx);
  RVec x0 = parse_x0(a.common.x0, sys.dim(), ctx);
  if (a.M < 1) throw std::invalid_argument("--M must be at least 1");
  BenettinConfig cfg(ctx, parse_decimal(a.T, ctx), a.M, a.seed,
                     parse_decimal(a.common.eps_pw, ctx), parse_decimal(a.common.delta, ctx));
  cfg.max_degree = a.common.max_degree;
  cfg.threads = a.common.threads;

  SpectrumResult res = lyapunov_spectrum(sys, x0, cfg);

  AtomicFile trace(a.common.out + "_trace.csv");
  {
    std::string h = "k,t";
    for (long p = 1; p <= sys.dim(); ++p) h += ",LE" + std::to_string(p);
    h += '\n';
    trace.write(h);
  }
  for (const auto& row : res.trace) {
    std::string line = std::to_string(row.k);
    line += ',';
    line += format_decimal(row.t);
    for (const Real& v : row.le_running) {
      line += ',';
      line += format_decimal(v);
    }
    line += '\n';
    trace.write(line);
  }
  trace.commit();

  ordered_json spec;
  ordered_json les = ordered_json::array();
  for (const Real& v : res.exponents) les.push_back(format_decimal(v));
  spec["LE"] = std::move(les);
  ordered_json sorted = ordered_json::array();
  for (size_t idx : res.desc_order)
    sorted.push_back({{"p", idx + 1}, {"value", format_decimal(res.exponents[idx])}});
  spec["LE_sorted"] = std::move(sorted);
  spec["T"] = format_decimal(cfg.T);
  spec["M"] = cfg.M;
  spec["tau_M"] = format_decimal(cfg.tau_M);
  spec["seed"] = cfg.seed;
  write_file_atomic(a.common.out + "_spectrum.json", spec.dump(2) + "\n");

  std::map<std::string, std::string> params{
      {"T", a.T}, {"M", std::to_string(a.M)}, {"seed", std::to_string(a.seed)}};
  write_manifest("lyapunov", a.common, std::move(params));

  std::cout << "tau_M = " << format_decimal(cfg.tau_M) << ", M = " << cfg.M << "\n";
  for (long p = 0; p < sys.dim(); ++p)
    std::cout << "LE" << (p + 1) << " = " << res.exponents[p].to_double() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- replay

int run_replay(const std::string& manifest_path, const std::string& out_override) {
  RunManifest m = RunManifest::load(manifest_path);
  std::string fresh = sha256_hex(read_file(m.system_path));
  if (!m.system_sha256.empty() && fresh != m.system_sha256)
    throw std::invalid_argument("system file changed since the manifest was written (sha256 " +
                                fresh + " != " + m.system_sha256 + ")");

  CommonArgs common;
  common.system = m.system_path;
  common_from_params(m.params, common);
  if (!out_override.empty()) common.out = out_override;

  if (m.command == "integrate") {
    IntegrateArgs a{common, m.params.at("T"), std::stoi(m.params.at("way")),
                    m.params.at("grid"), std::stol(m.params.at("stride"))};
    return run_integrate(a);
  }
  if (m.command == "verify") {
    VerifyArgs a{common, m.params.at("T"), m.params.at("eps_a"), m.params.at("eps_R"),
                 std::stod(m.params.at("rel_tol"))};
    return run_verify(a);
  }
  if (m.command == "recur") {
    RecurArgs a{common,
                m.params.at("TP"),
                m.params.at("dtP"),
                m.params.at("reach_T"),
                m.params.at("threshold"),
                m.params.at("refine") == "1",
                std::stoi(m.params.at("refine_max"))};
    return run_recur(a);
  }
  if (m.command == "lyapunov") {
    LyapArgs a{common, m.params.at("T"), std::stol(m.params.at("M")),
               std::stoul(m.params.at("seed"))};
    return run_lyapunov(a);
  }
  throw std::invalid_argument("manifest names an unknown command '" + m.command + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiprecision power-series toolkit for quadratic ODE systems"};
  app.require_subcommand(1);

  IntegrateArgs ia;
  VerifyArgs va;
  RecurArgs ra;
  LyapArgs la;
  ia.common.bm = va.common.bm = ra.common.bm = la.common.bm = default_bm();
  std::string replay_manifest, replay_out;

  CLI::App* ci = app.add_subcommand("integrate", "integrate over [0, way*T]");
  add_common(ci, ia.common);
  ci->add_option("--T", ia.T, "horizon")->required();
  ci->add_option("--way", ia.way, "time direction, +1 or -1")->capture_default_str();
  ci->add_option("--grid", ia.grid, "also resample on a uniform grid with this step");
  ci->add_option("--stride", ia.stride, "write every n-th step row")->capture_default_str();

  CLI::App* cv = app.add_subcommand("verify", "run the three accuracy criteria");
  add_common(cv, va.common);
  cv->add_option("--T", va.T, "horizon")->required();
  cv->add_option("--eps-a", va.eps_a, "criterion-1 accuracy")->capture_default_str();
  cv->add_option("--eps-R", va.eps_R, "criterion-2 return radius")->capture_default_str();
  cv->add_option("--rel-tol", va.rel_tol, "criterion-3 relative tolerance")
      ->capture_default_str();

  CLI::App* cr = app.add_subcommand("recur", "scan for recurrences with the start point");
  add_common(cr, ra.common);
  cr->add_option("--TP", ra.TP, "scan horizon T_P")->required();
  cr->add_option("--dtP", ra.dtP, "grid step (exact decimal)")->required();
  cr->add_option("--reach-T", ra.reach_T, "integrate this long before scanning")
      ->capture_default_str();
  cr->add_option("--threshold", ra.threshold, "rapprochement ceiling")->capture_default_str();
  cr->add_flag("--refine", ra.refine, "rescan at dt_P/10 until the minimum stabilizes");
  cr->add_option("--refine-max", ra.refine_max, "refinement level cap")->capture_default_str();

  CLI::App* cl = app.add_subcommand("lyapunov", "Benettin spectrum over the extended system");
  add_common(cl, la.common);
  cl->add_option("--T", la.T, "total horizon")->required();
  cl->add_option("--M", la.M, "number of macro-steps")->required();
  cl->add_option("--seed", la.seed, "perturbation RNG seed")->capture_default_str();

  CLI::App* cp = app.add_subcommand("replay", "re-run a manifest; outputs are byte-identical");
  cp->add_option("manifest", replay_manifest, "manifest JSON path")->required();
  cp->add_option("--out", replay_out, "override the output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (ci->parsed()) return run_integrate(ia);
    if (cv->parsed()) return run_verify(va);
    if (cr->parsed()) return run_recur(ra);
    if (cl->parsed()) return run_lyapunov(la);
    if (cp->parsed()) return run_replay(replay_manifest, replay_out);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PrecisionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const TruncationFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTruncation;
  } catch (const DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDegeneracy;
  } catch (const BallEscapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBallEscape;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
