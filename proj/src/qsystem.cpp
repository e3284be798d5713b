#include "fgbfi/qsystem.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

#include "fgbfi/io.hpp"

namespace fgbfi {

using ordered_json = nlohmann::ordered_json;

bool TrappingBall::contains(const RVec& x, long dims) const {
  Real d = dist2(x, center, dims);
  return d <= radius;
}

namespace {

std::vector<SparseEntry> nonzeros(const RMat& m) {
  std::vector<SparseEntry> out;
  for (long i = 0; i < m.rows; ++i)
    for (long j = 0; j < m.cols; ++j) {
      const Real& v = m.at(i, j);
      if (v.is_zero()) continue;
      int unit = 0;
      if (mpfr_cmp_si(v.raw(), 1) == 0)
        unit = 1;
      else if (mpfr_cmp_si(v.raw(), -1) == 0)
        unit = -1;
      out.push_back({i, j, v, unit});
    }
  return out;
}

}  // namespace

QuadSystem::QuadSystem(long n, RMat A, std::vector<RMat> Q, TrappingBall ball, std::string name,
                       std::map<std::string, std::string> params)
    : n_(n),
      A_(std::move(A)),
      Q_(std::move(Q)),
      ball_(std::move(ball)),
      name_(std::move(name)),
      params_(std::move(params)),
      norm_a_(A_.a.at(0).precision()),
      mu_(A_.a.at(0).precision()) {
  if (n_ < 1) throw std::invalid_argument("system dimension must be positive");
  if (A_.rows != n_ || A_.cols != n_)
    throw std::invalid_argument("A must be " + std::to_string(n_) + "x" + std::to_string(n_));
  if (static_cast<long>(Q_.size()) != n_)
    throw std::invalid_argument("expected " + std::to_string(n_) + " quadratic matrices, got " +
                                std::to_string(Q_.size()));
  for (long p = 0; p < n_; ++p)
    if (Q_[p].rows != n_ || Q_[p].cols != n_)
      throw std::invalid_argument("Q[" + std::to_string(p) + "] must be " + std::to_string(n_) +
                                  "x" + std::to_string(n_));
  if (static_cast<long>(ball_.center.size()) != n_)
    throw std::invalid_argument("ball center must have dimension " + std::to_string(n_));
  if (!(ball_.radius > Real::zero(PrecisionContext(ball_.radius.precision()))))
    throw std::invalid_argument("ball radius must be positive");

  a_nnz_ = nonzeros(A_);
  q_nnz_.reserve(Q_.size());
  for (const RMat& q : Q_) q_nnz_.push_back(nonzeros(q));

  norm_a_ = colsum_norm(A_);
  PrecisionContext ctx(norm_a_.precision());
  Real best = Real::zero(ctx);
  for (const RMat& q : Q_) best = max(best, colsum_norm(q));
  mu_ = Real::of(n_, ctx) * best;
}

ConvergenceBounds compute_bounds(const QuadSystem& sys, const RVec& x0, const Real& delta) {
  PrecisionContext ctx(sys.precision());
  if (!(delta > Real::zero(ctx))) throw std::invalid_argument("delta must be positive");
  if (static_cast<long>(x0.size()) != sys.dim())
    throw std::invalid_argument("x0 dimension mismatch");

  Real one = Real::of(1, ctx);
  Real two = Real::of(2, ctx);
  Real h1 = norm1(x0);
  Real h2(ctx);
  if (h1 > one) {
    // mu*h1^2 + (|A| + 2mu)*h1
    h2 = sys.mu() * h1 * h1 + (sys.norm_a() + two * sys.mu()) * h1;
  } else {
    h2 = sys.norm_a() + sys.mu();
  }
  Real tau = one / (h2 + delta);
  return ConvergenceBounds{sys.norm_a(), sys.mu(), h1, h2, delta, tau};
}

RVec eval_rhs(const QuadSystem& sys, const RVec& x) {
  if (static_cast<long>(x.size()) != sys.dim()) throw std::invalid_argument("x dimension mismatch");
  PrecisionContext ctx(sys.precision());
  RVec out = make_vec(sys.dim(), ctx);
  Real t(ctx);
  for (const SparseEntry& e : sys.a_entries()) {
    mpfr_mul(t.raw(), e.value.raw(), x[e.col].raw(), MPFR_RNDN);
    mpfr_add(out[e.row].raw(), out[e.row].raw(), t.raw(), MPFR_RNDN);
  }
  for (long p = 0; p < sys.dim(); ++p) {
    for (const SparseEntry& e : sys.q_entries()[p]) {
      // <Q_p x, x> contribution: v * x_col * x_row
      mpfr_mul(t.raw(), e.value.raw(), x[e.col].raw(), MPFR_RNDN);
      mpfr_mul(t.raw(), t.raw(), x[e.row].raw(), MPFR_RNDN);
      mpfr_add(out[p].raw(), out[p].raw(), t.raw(), MPFR_RNDN);
    }
  }
  return out;
}

QuadSystem extend_variational(const QuadSystem& sys) {
  long n = sys.dim();
  PrecisionContext ctx(sys.precision());

  RMat A2 = make_mat(2 * n, 2 * n, ctx);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      A2.at(i, j) = sys.A().at(i, j);
      A2.at(n + i, n + j) = sys.A().at(i, j);
    }

  std::vector<RMat> Q2;
  Q2.reserve(2 * static_cast<size_t>(n));
  for (long l = 0; l < n; ++l) {
    RMat q = make_mat(2 * n, 2 * n, ctx);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) q.at(i, j) = sys.Q()[l].at(i, j);
    Q2.push_back(std::move(q));
  }
  for (long p = 0; p < n; ++p) {
    RMat q = make_mat(2 * n, 2 * n, ctx);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        q.at(i, n + j) = sys.Q()[p].at(i, j) + sys.Q()[p].at(j, i);
    Q2.push_back(std::move(q));
  }

  TrappingBall ball2{make_vec(2 * n, ctx), sys.ball().radius + Real::of(2, ctx)};
  for (long i = 0; i < n; ++i) ball2.center[i] = sys.ball().center[i];

  return QuadSystem(2 * n, std::move(A2), std::move(Q2), std::move(ball2),
                    sys.name().empty() ? "" : sys.name() + "+variational", sys.params());
}

namespace {

Real parse_json_scalar(const ordered_json& v, const PrecisionContext& ctx,
                       const std::string& where) {
  if (v.is_string()) return parse_decimal(v.get<std::string>(), ctx);
  if (v.is_number_integer()) {
    Real r(ctx);
    mpfr_set_si(r.raw(), v.get<long>(), MPFR_RNDN);
    return r;
  }
  throw ParseError(where + ": numeric fields must be decimal strings (or exact integers), got " +
                   std::string(v.type_name()));
}

RMat parse_json_matrix(const ordered_json& v, long n, const PrecisionContext& ctx,
                       const std::string& where) {
  if (!v.is_array() || static_cast<long>(v.size()) != n)
    throw ParseError(where + ": expected " + std::to_string(n) + " rows");
  RMat m = make_mat(n, n, ctx);
  for (long i = 0; i < n; ++i) {
    const auto& row = v[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<long>(row.size()) != n)
      throw ParseError(where + " row " + std::to_string(i) + ": expected " + std::to_string(n) +
                       " entries (matrix must be square)");
    for (long j = 0; j < n; ++j)
      m.at(i, j) = parse_json_scalar(row[static_cast<size_t>(j)], ctx,
                                     where + "[" + std::to_string(i) + "][" + std::to_string(j) +
                                         "]");
  }
  return m;
}

}  // namespace

QuadSystem load_system(const std::string& path, const PrecisionContext& ctx) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ParseError(e.what());
  }
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path + ": top-level value must be an object");
  if (!doc.contains("n") || !doc["n"].is_number_integer())
    throw ParseError(path + ": field 'n' (integer dimension) is required");
  long n = doc["n"].get<long>();
  if (n < 1) throw ParseError(path + ": 'n' must be positive");

  if (!doc.contains("A")) throw ParseError(path + ": field 'A' is required");
  RMat A = parse_json_matrix(doc["A"], n, ctx, path + ": A");

  if (!doc.contains("Q") || !doc["Q"].is_array())
    throw ParseError(path + ": field 'Q' (array of matrices) is required");
  if (static_cast<long>(doc["Q"].size()) != n)
    throw ParseError(path + ": 'Q' must hold exactly n=" + std::to_string(n) +
                     " matrices, got " + std::to_string(doc["Q"].size()));
  std::vector<RMat> Q;
  Q.reserve(static_cast<size_t>(n));
  for (long p = 0; p < n; ++p)
    Q.push_back(parse_json_matrix(doc["Q"][static_cast<size_t>(p)], n, ctx,
                                  path + ": Q[" + std::to_string(p) + "]"));

  if (!doc.contains("ball") || !doc["ball"].is_object())
    throw ParseError(path + ": field 'ball' ({center, radius}) is required");
  const auto& jball = doc["ball"];
  if (!jball.contains("center") || !jball["center"].is_array() ||
      static_cast<long>(jball["center"].size()) != n)
    throw ParseError(path + ": ball.center must be an array of n=" + std::to_string(n) +
                     " values");
  TrappingBall ball{make_vec(n, ctx), Real::zero(ctx)};
  for (long i = 0; i < n; ++i)
    ball.center[i] = parse_json_scalar(jball["center"][static_cast<size_t>(i)], ctx,
                                       path + ": ball.center[" + std::to_string(i) + "]");
  if (!jball.contains("radius")) throw ParseError(path + ": ball.radius is required");
  ball.radius = parse_json_scalar(jball["radius"], ctx, path + ": ball.radius");

  std::string name = doc.value("name", std::string{});
  std::map<std::string, std::string> params;
  if (doc.contains("params")) {
    if (!doc["params"].is_object()) throw ParseError(path + ": 'params' must be an object");
    for (auto it = doc["params"].begin(); it != doc["params"].end(); ++it) {
      if (it.value().is_string())
        params[it.key()] = it.value().get<std::string>();
      else
        params[it.key()] = it.value().dump();
    }
  }

  try {
    return QuadSystem(n, std::move(A), std::move(Q), std::move(ball), std::move(name),
                      std::move(params));
  } catch (const std::invalid_argument& e) {
    throw ParseError(path + ": " + e.what());
  }
}

namespace {

ordered_json matrix_to_json(const RMat& m) {
  ordered_json rows = ordered_json::array();
  for (long i = 0; i < m.rows; ++i) {
    ordered_json row = ordered_json::array();
    for (long j = 0; j < m.cols; ++j) row.push_back(format_decimal(m.at(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void save_system(const QuadSystem& sys, const std::string& path) {
  ordered_json doc;
  if (!sys.name().empty()) doc["name"] = sys.name();
  doc["n"] = sys.dim();
  doc["A"] = matrix_to_json(sys.A());
  ordered_json qs = ordered_json::array();
  for (const RMat& q : sys.Q()) qs.push_back(matrix_to_json(q));
  doc["Q"] = std::move(qs);
  ordered_json center = ordered_json::array();
  for (const Real& c : sys.ball().center) center.push_back(format_decimal(c));
  doc["ball"] = {{"center", std::move(center)}, {"radius", format_decimal(sys.ball().radius)}};
  if (!sys.params().empty()) {
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : sys.params()) params[k] = v;
    doc["params"] = std::move(params);
  }
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace fgbfi
