#include "biclab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "biclab/errors.hpp"
#include "biclab/lp.hpp"
#include "biclab/rng.hpp"

namespace biclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_regularity(double r) {
  if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorCode::invalid_input, "declared regularity must lie in (0,1]");
}

const char* kind_name(ConvexBody::Kind k) {
  switch (k) {
    case ConvexBody::Kind::ball: return "ball";
    case ConvexBody::Kind::box: return "box";
    case ConvexBody::Kind::half_spaces: return "halfspace";
  }
  return "?";
}

}  // namespace

ConvexBody ConvexBody::ball(int dim, double radius, double regularity) {
  if (dim < 1) throw Error(ErrorCode::invalid_input, "dimension must be positive");
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_input, "ball radius must be positive");
  require_regularity(regularity);
  ConvexBody b;
  b.kind_ = Kind::ball;
  b.dim_ = dim;
  b.radius_ = radius;
  b.regularity_ = regularity;
  return b;
}

ConvexBody ConvexBody::box(Vec lower, Vec upper, double regularity) {
  if (lower.size() == 0 || lower.size() != upper.size())
    throw Error(ErrorCode::invalid_input, "box bounds must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] < upper[i]))
      throw Error(ErrorCode::invalid_input, "box intervals must be finite with lower < upper");
  }
  require_regularity(regularity);
  ConvexBody b;
  b.kind_ = Kind::box;
  b.dim_ = static_cast<int>(lower.size());
  b.lower_ = std::move(lower);
  b.upper_ = std::move(upper);
  b.regularity_ = regularity;
  return b;
}

ConvexBody ConvexBody::half_spaces(Mat rows, Vec offsets, double regularity) {
  if (rows.rows() == 0 || rows.rows() != offsets.size())
    throw Error(ErrorCode::invalid_input, "half-space body needs matching rows and offsets");
  require_regularity(regularity);
  ConvexBody b;
  b.kind_ = Kind::half_spaces;
  b.dim_ = static_cast<int>(rows.cols());
  b.rows_ = std::move(rows);
  b.offsets_ = std::move(offsets);
  b.regularity_ = regularity;
  b.bound_ = std::numeric_limits<double>::quiet_NaN();
  try {
    double s = 0.0;
    for (int i = 0; i < b.dim_; ++i) {
      Vec e = Vec::Zero(b.dim_);
      e[i] = 1.0;
      const double m = std::max(std::abs(b.support(e)), std::abs(b.support(-e)));
      s += m * m;
    }
    b.bound_ = std::sqrt(s);
  } catch (const Error&) {
    // reported by support()/bounding_radius() when used
  }
  return b;
}

bool ConvexBody::contains(const Vec& x, double tol) const {
  switch (kind_) {
    case Kind::ball: return x.norm() <= radius_ + tol;
    case Kind::box:
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
      return true;
    case Kind::half_spaces: return ((rows_ * x - offsets_).array() <= tol).all();
  }
  return false;
}

double ConvexBody::support(const Vec& v) const {
  if (v.size() != dim_) throw Error(ErrorCode::invalid_input, "direction dimension mismatch");
  if (!v.allFinite()) throw Error(ErrorCode::invalid_input, "direction must be finite");
  switch (kind_) {
    case Kind::ball: return radius_ * v.norm();
    case Kind::box: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) s += std::max(lower_[i] * v[i], upper_[i] * v[i]);
      return s;
    }
    case Kind::half_spaces: {
      LinearProgram lp;
      lp.objective = v;
      lp.rows = rows_;
      lp.rhs = offsets_;
      lp.senses.assign(static_cast<std::size_t>(rows_.rows()), RowSense::less_equal);
      const LpResult r = solve_lp_free(lp);
      if (r.status == LpStatus::unbounded)
        throw Error(ErrorCode::infeasible_geometry, "half-space body is unbounded");
      if (r.status == LpStatus::infeasible)
        throw Error(ErrorCode::infeasible_geometry, "half-space body is empty");
      if (r.status != LpStatus::optimal) throw Error(ErrorCode::solver_error, "support LP did not converge");
      return r.value;
    }
  }
  return 0.0;
}

double ConvexBody::bounding_radius() const {
  switch (kind_) {
    case Kind::ball: return radius_;
    case Kind::box: return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
    case Kind::half_spaces:
      if (!std::isfinite(bound_)) throw Error(ErrorCode::infeasible_geometry, "half-space body is unbounded or empty");
      return bound_;
  }
  return 0.0;
}

std::pair<double, double> ConvexBody::chord(const Vec& x, const Vec& dir) const {
  double lo = -kInf, hi = kInf;
  switch (kind_) {
    case Kind::ball: {
      const double a = dir.squaredNorm();
      const double b = x.dot(dir);
      const double c = x.squaredNorm() - radius_ * radius_;
      const double disc = b * b - a * c;
      if (a == 0.0 || disc < 0.0) return {0.0, 0.0};
      const double s = std::sqrt(disc);
      return {(-b - s) / a, (-b + s) / a};
    }
    case Kind::box:
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dir[i] > 0.0) {
          lo = std::max(lo, (lower_[i] - x[i]) / dir[i]);
          hi = std::min(hi, (upper_[i] - x[i]) / dir[i]);
        } else if (dir[i] < 0.0) {
          lo = std::max(lo, (upper_[i] - x[i]) / dir[i]);
          hi = std::min(hi, (lower_[i] - x[i]) / dir[i]);
        }
      }
      break;
    case Kind::half_spaces: {
      const Vec ad = rows_ * dir;
      const Vec slack = offsets_ - rows_ * x;
      for (Eigen::Index i = 0; i < ad.size(); ++i) {
        if (ad[i] > 0.0) hi = std::min(hi, slack[i] / ad[i]);
        else if (ad[i] < 0.0) lo = std::max(lo, slack[i] / ad[i]);
      }
      break;
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::infeasible_geometry, "chord is unbounded");
  return {lo, std::max(lo, hi)};
}

ConvexBody ConvexBody::scaled(double s) const {
  if (!(s > 0.0)) throw Error(ErrorCode::invalid_input, "scale must be positive");
  ConvexBody b = *this;
  b.radius_ *= s;
  b.lower_ *= s;
  b.upper_ *= s;
  b.offsets_ *= s;
  b.bound_ *= s;
  b.regularity_ = std::min(1.0, regularity_ * s);
  return b;
}

json ConvexBody::to_json() const {
  json j;
  j["kind"] = kind_name(kind_);
  j["dim"] = dim_;
  j["r"] = regularity_;
  switch (kind_) {
    case Kind::ball: j["radius"] = radius_; break;
    case Kind::box:
      j["lower"] = biclab::to_json(lower_);
      j["upper"] = biclab::to_json(upper_);
      break;
    case Kind::half_spaces:
      j["rows"] = biclab::to_json(rows_);
      j["offsets"] = biclab::to_json(offsets_);
      break;
  }
  return j;
}

ConvexBody ConvexBody::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw Error(ErrorCode::invalid_input, "body needs a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  const double r = j.value("r", 1.0);
  if (kind == "ball") return ball(j.at("dim").get<int>(), j.value("radius", 1.0), r);
  if (kind == "box") return box(vector_from_json(j.at("lower")), vector_from_json(j.at("upper")), r);
  if (kind == "halfspace") return half_spaces(matrix_from_json(j.at("rows")), vector_from_json(j.at("offsets")), r);
  throw Error(ErrorCode::invalid_input, "unknown body kind \"" + kind + "\"");
}

RegularityCheck check_regularity(const ConvexBody& body, int directions, std::uint64_t seed) {
  Stream rng = derive_stream(seed, 0);
  RegularityCheck c;
  c.min_support = kInf;
  const Vec origin = Vec::Zero(body.dim());
  for (int k = 0; k < directions; ++k) {
    Vec v(body.dim());
    for (int i = 0; i < body.dim(); ++i) v[i] = rng.normal();
    v.normalize();
    c.min_support = std::min(c.min_support, body.support(v));
    c.max_norm = std::max(c.max_norm, body.chord(origin, v).second);
  }
  c.holds = c.min_support >= body.regularity() - 1e-12 && c.max_norm <= 1.0 + 1e-12;
  return c;
}

ActionSet ActionSet::unit(std::vector<Vec> vectors) {
  ActionSet s = general(std::move(vectors));
  for (const auto& v : s.vectors_)
    if (std::abs(v.norm() - 1.0) > 1e-12) throw Error(ErrorCode::invalid_input, "action is not a unit vector");
  s.unit_ = true;
  return s;
}

ActionSet ActionSet::general(std::vector<Vec> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::invalid_input, "empty action set");
  const auto d = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != d || d == 0) throw Error(ErrorCode::invalid_input, "actions must share a positive dimension");
    if (!v.allFinite()) throw Error(ErrorCode::invalid_input, "action has non-finite entries");
  }
  ActionSet s;
  s.vectors_ = std::move(vectors);
  return s;
}

json ActionSet::to_json() const {
  json vs = json::array();
  for (const auto& v : vectors_) vs.push_back(biclab::to_json(v));
  return json{{"kind", unit_ ? "unit" : "general"}, {"vectors", vs}};
}

ActionSet ActionSet::from_json(const json& j) {
  std::vector<Vec> vs;
  for (const auto& v : j.at("vectors")) vs.push_back(vector_from_json(v));
  const std::string kind = j.value("kind", "unit");
  if (kind == "unit") return unit(std::move(vs));
  if (kind == "general" || kind == "vertices") return general(std::move(vs));
  throw Error(ErrorCode::invalid_input, "unknown action-set kind \"" + kind + "\"");
}

double separation(const ActionSet& actions) {
  if (actions.size() < 2) throw Error(ErrorCode::invalid_input, "separation needs at least two actions");
  double best = kInf;
  for (std::size_t i = 0; i < actions.size(); ++i)
    for (std::size_t j = i + 1; j < actions.size(); ++j) best = std::min(best, (actions[i] - actions[j]).norm());
  return best;
}

double separation(ActionSet& actions) {
  const double s = separation(static_cast<const ActionSet&>(actions));
  actions.separation_ = s;
  return s;
}

double width(const ConvexBody& body, const Vec& v) { return body.support(v) + body.support(-v); }

std::size_t best_action(const ActionSet& actions, const Vec& l) {
  std::size_t best = 0;
  double value = actions[0].dot(l);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    const double x = actions[i].dot(l);
    if (x > value) {
      value = x;
      best = i;
    }
  }
  return best;
}

bool optimal_region_contains(const ActionSet& actions, std::size_t i, const Vec& l) {
  if (i >= actions.size()) throw Error(ErrorCode::invalid_input, "action index out of range");
  const double tol = 1e-12 * (1.0 + l.norm());
  const double vi = actions[i].dot(l);
  for (const auto& a : actions.vectors())
    if (vi - a.dot(l) < -tol) return false;
  return true;
}

ActionSet circle_actions(int count, double offset) {
  std::vector<Vec> vs;
  for (int k = 0; k < count; ++k) {
    const double angle = offset + 2.0 * std::numbers::pi * k / count;
    Vec v(2);
    v << std::cos(angle), std::sin(angle);
    vs.push_back(v / v.norm());
  }
  return ActionSet::unit(std::move(vs));
}

ActionSet cross_polytope_actions(int dim) {
  std::vector<Vec> vs;
  for (int i = 0; i < dim; ++i) {
    Vec e = Vec::Zero(dim);
    e[i] = 1.0;
    vs.push_back(e);
    vs.push_back(-e);
  }
  return ActionSet::unit(std::move(vs));
}

PolytopeVertexSet::PolytopeVertexSet(std::vector<Vec> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw Error(ErrorCode::invalid_input, "empty vertex set");
  for (const auto& v : vertices_)
    if (v.size() != vertices_.front().size()) throw Error(ErrorCode::invalid_input, "vertices must share a dimension");
}

namespace {

// Feasibility LP over weights: Σ w_k v_k = x, Σ w_k = 1, w >= 0, optionally
// excluding one vertex.
LpResult hull_lp(const std::vector<Vec>& vertices, const Vec& point, std::optional<std::size_t> skip) {
  const auto d = point.size();
  std::vector<std::size_t> cols;
  for (std::size_t k = 0; k < vertices.size(); ++k)
    if (!skip || *skip != k) cols.push_back(k);
  LinearProgram lp;
  lp.objective = Vec::Zero(static_cast<Eigen::Index>(cols.size()));
  lp.rows = Mat::Zero(d + 1, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    lp.rows.block(0, static_cast<Eigen::Index>(c), d, 1) = vertices[cols[c]];
    lp.rows(d, static_cast<Eigen::Index>(c)) = 1.0;
  }
  lp.rhs.resize(d + 1);
  lp.rhs << point, 1.0;
  lp.senses.assign(static_cast<std::size_t>(d + 1), RowSense::equal);
  return solve_lp(lp);
}

}  // namespace

bool PolytopeVertexSet::all_extreme() const {
  for (std::size_t k = 0; k < vertices_.size(); ++k) {
    if (vertices_.size() == 1) return true;
    if (hull_lp(vertices_, vertices_[k], k).status == LpStatus::optimal) return false;
  }
  return true;
}

bool hull_contains(const PolytopeVertexSet& vertices, const Vec& point) {
  if (point.size() != vertices.dim()) throw Error(ErrorCode::invalid_input, "point dimension mismatch");
  return hull_lp(vertices.vertices(), point, std::nullopt).status == LpStatus::optimal;
}

Decomposition caratheodory_decompose(const PolytopeVertexSet& vertices, const Vec& point) {
  if (point.size() != vertices.dim()) throw Error(ErrorCode::invalid_input, "point dimension mismatch");
  const LpResult r = hull_lp(vertices.vertices(), point, std::nullopt);
  if (r.status == LpStatus::infeasible) throw Error(ErrorCode::infeasible_geometry, "point lies outside the hull");
  if (r.status != LpStatus::optimal) throw Error(ErrorCode::solver_error, "hull LP failed");

  Decomposition out;
  double total = 0.0;
  for (Eigen::Index k = 0; k < r.x.size(); ++k) {
    if (r.x[k] > 1e-14) {
      out.terms.push_back({r.x[k], static_cast<std::size_t>(k)});
      total += r.x[k];
    }
  }
  for (auto& t : out.terms) t.weight /= total;
  Vec rebuilt = Vec::Zero(point.size());
  std::size_t heaviest = 0;
  for (std::size_t i = 0; i < out.terms.size(); ++i) {
    rebuilt += out.terms[i].weight * vertices[out.terms[i].vertex];
    if (out.terms[i].weight > out.terms[heaviest].weight) heaviest = i;
  }
  out.reconstruction_error = (rebuilt - point).norm();
  out.chart_base = out.terms[heaviest].vertex;
  out.chart_terms = out.terms.size() - 1;
  if (out.reconstruction_error > 1e-9)
    throw Error(ErrorCode::solver_error, "decomposition does not reconstruct the point");
  return out;
}

BiasedPolytope biased_polytope(int dim) {
  if (dim < 2 || dim > 24) throw Error(ErrorCode::invalid_input, "biased polytope dimension must lie in [2, 24]");
  const double half = 1.0 / (2.0 * std::sqrt(static_cast<double>(dim)));
  const int m = dim - 1;

  // Half-space form: 10 s_d x_d + 2√d s_i x_i <= 1 for every sign pair and i < d.
  Mat rows = Mat::Zero(4 * m, dim);
  int r = 0;
  for (int i = 0; i < m; ++i)
    for (double sd : {1.0, -1.0})
      for (double si : {1.0, -1.0}) {
        rows(r, dim - 1) = 10.0 * sd;
        rows(r, i) = 2.0 * std::sqrt(static_cast<double>(dim)) * si;
        ++r;
      }
  Vec offsets = Vec::Ones(4 * m);

  std::vector<Vec> verts;
  std::size_t optimal = 0;
  for (long mask = 0; mask < (1L << m); ++mask) {
    Vec v = Vec::Zero(dim);
    for (int i = 0; i < m; ++i) v[i] = (mask >> i) & 1 ? -half : half;
    if (mask == 0) optimal = verts.size();
    verts.push_back(v);
  }
  Vec apex = Vec::Zero(dim);
  apex[dim - 1] = 0.1;
  verts.push_back(apex);
  verts.push_back(-apex);

  BiasedPolytope p{dim, ConvexBody::half_spaces(rows, offsets, 1.0 / std::sqrt(100.0 + 4.0 * dim)),
                   PolytopeVertexSet(std::move(verts)), optimal};
  return p;
}

json geometry_document(const ConvexBody& body, const ActionSet& actions) {
  return json{{"body", body.to_json()}, {"actions", actions.to_json()}};
}

json geometry_document(const ConvexBody& body, const PolytopeVertexSet& vertices) {
  json vs = json::array();
  for (const auto& v : vertices.vertices()) vs.push_back(to_json(v));
  return json{{"body", body.to_json()}, {"actions", json{{"kind", "vertices"}, {"vectors", vs}}}};
}

}  // namespace biclab
