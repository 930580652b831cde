#include <doctest.h>

#include <cmath>
#include <numbers>

#include "biclab/errors.hpp"
#include "biclab/geometry.hpp"
#include "biclab/priors.hpp"
#include "biclab/rng.hpp"

using namespace biclab;

namespace {

Vec random_unit(int d, Stream& rng) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v.normalized();
}

ConvexBody square_as_half_spaces(double h) {
  Mat rows(4, 2);
  rows << 1, 0, -1, 0, 0, 1, 0, -1;
  return ConvexBody::half_spaces(rows, Vec::Constant(4, h), h);
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("support functions against closed forms") {
    Stream rng(3);
    const ConvexBody ball = ConvexBody::ball(3, 0.7, 0.7);
    const ConvexBody box = ConvexBody::box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5), 0.5);
    const ConvexBody poly = square_as_half_spaces(0.5);
    for (int k = 0; k < 20; ++k) {
      const Vec v3 = random_unit(3, rng) * 1.7;
      CHECK(ball.support(v3) == doctest::Approx(0.7 * v3.norm()));
      const Vec v2 = random_unit(2, rng);
      const double box_support = 0.5 * (std::abs(v2[0]) + std::abs(v2[1]));
      CHECK(box.support(v2) == doctest::Approx(box_support));
      CHECK(poly.support(v2) == doctest::Approx(box_support).epsilon(1e-9));
      CHECK(width(ball, v3) == doctest::Approx(1.4 * v3.norm()));
    }
  }

  TEST_CASE("chords stay inside the body") {
    const ConvexBody ball = ConvexBody::ball(2, 1.0, 1.0);
    const auto [lo, hi] = ball.chord(Vec::Zero(2), Vec::Unit(2, 0));
    CHECK(lo == doctest::Approx(-1.0));
    CHECK(hi == doctest::Approx(1.0));
    const ConvexBody poly = square_as_half_spaces(0.5);
    const auto [a, b] = poly.chord(Vec::Zero(2), Vec(Vec::Ones(2)));
    CHECK(a == doctest::Approx(-0.5));
    CHECK(b == doctest::Approx(0.5));
  }

  TEST_CASE("unbounded half-space bodies have no bounding radius") {
    Mat rows(1, 2);
    rows << 1, 0;
    const ConvexBody half = ConvexBody::half_spaces(rows, Vec::Ones(1), 0.5);
    CHECK_THROWS_AS(half.bounding_radius(), Error);
  }

  TEST_CASE("regularity check") {
    CHECK(check_regularity(ConvexBody::ball(3, 1.0, 1.0), 200, 1).holds);
    CHECK(check_regularity(square_as_half_spaces(0.5), 200, 1).holds);
    // Declaring r larger than the inradius must fail.
    Mat rows(4, 2);
    rows << 1, 0, -1, 0, 0, 1, 0, -1;
    CHECK_FALSE(check_regularity(ConvexBody::half_spaces(rows, Vec::Constant(4, 0.5), 0.6), 200, 1).holds);
  }

  TEST_CASE("separation and action constructors") {
    auto circle = circle_actions(8);
    CHECK(separation(circle) == doctest::Approx(2.0 * std::sin(std::numbers::pi / 8)));
    CHECK(circle.cached_separation().has_value());
    auto cross = cross_polytope_actions(3);
    REQUIRE(cross.size() == 6);
    CHECK(cross[1][0] == doctest::Approx(-1.0));
    CHECK(cross[2][1] == doctest::Approx(1.0));
    CHECK(separation(cross) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(ActionSet::unit({Vec::Constant(2, 1.0)}), Error);
  }

  TEST_CASE("best action breaks ties toward the smaller index") {
    const ActionSet set = ActionSet::unit({Vec::Unit(2, 0), Vec::Unit(2, 1)});
    CHECK(best_action(set, Vec::Ones(2)) == 0);
    CHECK(best_action(set, Vec(Vec::Unit(2, 1))) == 1);
    CHECK(optimal_region_contains(set, 0, Vec::Ones(2)));
    CHECK(optimal_region_contains(set, 1, Vec::Ones(2)));
  }

  TEST_CASE("json round trips") {
    const ConvexBody poly = square_as_half_spaces(0.5);
    const ConvexBody back = ConvexBody::from_json(poly.to_json());
    CHECK(back.kind() == ConvexBody::Kind::half_spaces);
    CHECK(back.regularity() == poly.regularity());
    CHECK((back.rows() - poly.rows()).norm() == 0.0);
    const ActionSet acts = circle_actions(5, 0.3);
    const ActionSet acts_back = ActionSet::from_json(acts.to_json());
    REQUIRE(acts_back.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK((acts_back[i] - acts[i]).norm() == 0.0);
    CHECK_THROWS_AS(ConvexBody::from_json(json{{"kind", "torus"}}), Error);
  }

  TEST_CASE("caratheodory decompositions are short and exact") {
    Stream rng(19);
    for (int d = 2; d <= 5; ++d) {
      std::vector<Vec> pts;
      for (int k = 0; k < 3 * d + 4; ++k) pts.push_back(random_unit(d, rng));
      const PolytopeVertexSet hull(pts);
      for (int trial = 0; trial < 10; ++trial) {
        Vec p = Vec::Zero(d);
        double total = 0.0;
        std::vector<double> w(pts.size());
        for (auto& x : w) total += (x = rng.gamma(1.0));
        for (std::size_t k = 0; k < pts.size(); ++k) p += w[k] / total * pts[k];
        const Decomposition dec = caratheodory_decompose(hull, p);
        CHECK(dec.terms.size() <= static_cast<std::size_t>(d + 1));
        CHECK(dec.chart_terms <= static_cast<std::size_t>(d));
        double sum = 0.0;
        Vec rebuilt = Vec::Zero(d);
        for (const auto& t : dec.terms) {
          CHECK(t.weight > 0.0);
          sum += t.weight;
          rebuilt += t.weight * pts[t.vertex];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((rebuilt - p).norm() < 1e-9);
      }
    }
  }

  TEST_CASE("points outside the hull are rejected") {
    const PolytopeVertexSet tri({Vec::Unit(2, 0), Vec::Unit(2, 1), Vec::Zero(2)});
    CHECK(hull_contains(tri, Vec::Constant(2, 0.25)));
    CHECK_FALSE(hull_contains(tri, Vec::Constant(2, 0.75)));
    CHECK_THROWS_AS(caratheodory_decompose(tri, Vec::Constant(2, 0.75)), Error);
  }

  TEST_CASE("biased polytope in both representations") {
    for (int d : {2, 3, 5}) {
      const BiasedPolytope p = biased_polytope(d);
      const double rd = std::sqrt(static_cast<double>(d));
      CHECK(p.vertices.size() == (std::size_t{1} << (d - 1)) + 2);
      CHECK(p.vertices.all_extreme());
      for (const Vec& v : p.vertices.vertices()) {
        double tilt = 0.0;
        for (int i = 0; i + 1 < d; ++i) tilt = std::max(tilt, std::abs(v[i]));
        CHECK(10.0 * std::abs(v[d - 1]) + 2.0 * rd * tilt == doctest::Approx(1.0));
        CHECK(p.inequality.contains(v, 1e-12));
        CHECK(v.norm() <= 1.0);
      }
      // Inradius of the rows 10|x_d| + 2√d|x_i| <= 1.
      CHECK(p.inequality.regularity() == doctest::Approx(1.0 / std::sqrt(100.0 + 4.0 * d)));
      Vec prior_opt = Vec::Constant(d, 1.0 / (2.0 * rd));
      prior_opt[d - 1] = 0.0;
      CHECK((p.vertices[p.prior_optimal] - prior_opt).norm() < 1e-15);
      Stream rng(static_cast<std::uint64_t>(d));
      for (int k = 0; k < 20; ++k) {
        const Vec u = random_unit(d, rng);
        CHECK(p.inequality.support(u) >= p.inequality.regularity() - 1e-12);
      }
    }
  }
}
