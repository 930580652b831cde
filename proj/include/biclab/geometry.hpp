#pragma once

#include <Eigen/Core>
#include <optional>
#include <utility>
#include <vector>

#include "biclab/json_io.hpp"

namespace biclab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Compact convex body K with a declared regularity radius r, meaning
/// B_r(0) ⊆ K ⊆ B_1(0) (check_regularity() verifies the claim).
class ConvexBody {
 public:
  enum class Kind { ball, box, half_spaces };

  static ConvexBody ball(int dim, double radius, double regularity);
  static ConvexBody box(Vec lower, Vec upper, double regularity);
  /// { x : rows * x <= offsets }.
  static ConvexBody half_spaces(Mat rows, Vec offsets, double regularity);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double regularity() const { return regularity_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Mat& rows() const { return rows_; }
  const Vec& offsets() const { return offsets_; }

  bool contains(const Vec& x, double tol = 1e-12) const;
  /// max over K of <l, v>.
  double support(const Vec& v) const;
  /// Radius of a centered ball containing K.
  double bounding_radius() const;
  /// Parameter interval {t : x + t*dir ∈ K} for x inside K.
  std::pair<double, double> chord(const Vec& x, const Vec& dir) const;

  /// Same body scaled by s > 0 (regularity scales too).
  ConvexBody scaled(double s) const;

  json to_json() const;
  static ConvexBody from_json(const json& j);

 private:
  Kind kind_ = Kind::ball;
  int dim_ = 0;
  double regularity_ = 1.0;
  double radius_ = 1.0;
  Vec lower_, upper_;
  Mat rows_;
  Vec offsets_;
  double bound_ = 0.0;  // cached for half-space bodies; NaN when unbounded
};

struct RegularityCheck {
  double min_support = 0.0;  // over sampled unit directions
  double max_norm = 0.0;     // over sampled boundary points
  bool holds = false;
};

/// Empirical check of B_r ⊆ K ⊆ B_1 along `directions` random unit vectors.
RegularityCheck check_regularity(const ConvexBody& body, int directions, std::uint64_t seed);

/// Finite ordered action set. Index order is the tie-breaking order.
class ActionSet {
 public:
  /// Every vector must have unit norm within 1e-12.
  static ActionSet unit(std::vector<Vec> vectors);
  /// No norm requirement (used for counterexample instances).
  static ActionSet general(std::vector<Vec> vectors);

  std::size_t size() const { return vectors_.size(); }
  int dim() const { return vectors_.empty() ? 0 : static_cast<int>(vectors_.front().size()); }
  const Vec& operator[](std::size_t i) const { return vectors_[i]; }
  const std::vector<Vec>& vectors() const { return vectors_; }
  bool is_unit() const { return unit_; }
  /// Separation cached by separation(); empty until computed.
  std::optional<double> cached_separation() const { return separation_; }

  json to_json() const;
  static ActionSet from_json(const json& j);

 private:
  friend double separation(ActionSet& actions);
  std::vector<Vec> vectors_;
  bool unit_ = false;
  std::optional<double> separation_;
};

/// Minimum pairwise Euclidean distance; caches it on the set.
double separation(ActionSet& actions);
double separation(const ActionSet& actions);

double width(const ConvexBody& body, const Vec& v);

/// argmax_i <l, A_i>, ties to the smallest index.
std::size_t best_action(const ActionSet& actions, const Vec& l);

/// True iff <l, A_i - A> >= 0 for every A in the set.
bool optimal_region_contains(const ActionSet& actions, std::size_t i, const Vec& l);

/// Equally spaced unit vectors on the circle, the first at angle `offset`.
ActionSet circle_actions(int count, double offset = 0.0);
/// {±e_1, ..., ±e_d} ordered e_1, -e_1, e_2, -e_2, ...
ActionSet cross_polytope_actions(int dim);

class PolytopeVertexSet {
 public:
  explicit PolytopeVertexSet(std::vector<Vec> vertices);
  std::size_t size() const { return vertices_.size(); }
  int dim() const { return vertices_.empty() ? 0 : static_cast<int>(vertices_.front().size()); }
  const Vec& operator[](std::size_t i) const { return vertices_[i]; }
  const std::vector<Vec>& vertices() const { return vertices_; }

  /// True iff no listed point is a convex combination of the others (LP check).
  bool all_extreme() const;

 private:
  std::vector<Vec> vertices_;
};

/// Whether `point` lies in the convex hull of the vertices (LP feasibility,
/// slack tolerance 1e-9).
bool hull_contains(const PolytopeVertexSet& vertices, const Vec& point);

struct WeightedVertex {
  double weight = 0.0;
  std::size_t vertex = 0;
};

struct Decomposition {
  /// Nonzero weights only; they sum to 1. A basic solution has at most d+1
  /// entries.
  std::vector<WeightedVertex> terms;
  /// Vertex carrying the largest weight. Relative to it the point is
  /// base + Σ w_k (v_k - base), which uses at most d of the other terms.
  std::size_t chart_base = 0;
  std::size_t chart_terms = 0;
  double reconstruction_error = 0.0;
};

Decomposition caratheodory_decompose(const PolytopeVertexSet& vertices, const Vec& point);

/// P = { x : 10|x_d| + 2√d max_{i<d} |x_i| <= 1 }, in both representations.
struct BiasedPolytope {
  int dim = 0;
  ConvexBody inequality;        // half-space form
  PolytopeVertexSet vertices;   // cube corners with x_d = 0, then +Â, -Â
  std::size_t prior_optimal = 0;  // index of (1,...,1,0)/(2√d)
};

BiasedPolytope biased_polytope(int dim);

/// {"body": ..., "actions": ...} document.
json geometry_document(const ConvexBody& body, const ActionSet& actions);
json geometry_document(const ConvexBody& body, const PolytopeVertexSet& vertices);

}  // namespace biclab
