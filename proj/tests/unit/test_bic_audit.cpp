#include <doctest.h>

#include <cmath>
#include <numbers>

#include "biclab/bic_audit.hpp"
#include "biclab/errors.hpp"

using namespace biclab;

namespace {

// Brute force: inner Monte Carlo over the rank-one posterior instead of the
// exact line probability.
std::pair<double, double> counterexample_oracle(std::size_t outer, std::size_t inner, std::uint64_t seed) {
  const auto acts = counterexample_1_actions();
  const ActionSet set = ActionSet::general(acts);
  Stream rng(seed);
  Moments m;
  for (std::size_t k = 0; k < outer; ++k) {
    Vec l(2), first(2);
    l << rng.normal(), rng.normal();
    first << rng.normal(), rng.normal();
    const Vec a = acts[best_action(set, first)];
    const double x = a.dot(l);
    const Vec mean = a * x / a.squaredNorm();
    const Vec perp = Vec(Vec::Zero(2)) + Eigen::Vector2d(-a[1], a[0]) / a.norm();
    int hits = 0;
    for (std::size_t s = 0; s < inner; ++s)
      if (best_action(set, Vec(mean + rng.normal() * perp)) == 0) ++hits;
    m.add(static_cast<double>(hits) / inner * mean.dot(acts[2] - acts[0]));
  }
  return {m.mean(), m.standard_error()};
}

LinearAuditConfig disc_config() {
  LinearAuditConfig c;
  c.prior = LinearPrior::uniform(ConvexBody::ball(2, 1.0, 1.0));
  c.actions = cross_polytope_actions(2);
  c.obs = ObsModel{ObsKind::gaussian, 1.0};
  // e_1, e_2, e_1, e_2 among e_1, -e_1, e_2, -e_2.
  c.schedule.kind = PolicySpec::Kind::schedule;
  c.schedule.schedule = {0, 2, 0, 2};
  c.times = {1, 5};
  c.replications = 3000;
  c.n_inner = 100;
  c.seed = 31;
  c.jobs = 1;
  return c;
}

}  // namespace

TEST_SUITE("bic_audit") {
  TEST_CASE("counterexample one against a brute-force oracle") {
    const CounterexampleOneReport r = run_counterexample_1(200000, 41, 1);
    const auto [oracle, oracle_se] = counterexample_oracle(40000, 200, 42);
    CHECK(std::abs(r.margin - oracle) < 4.0 * std::hypot(r.margin_se, oracle_se));
    CHECK(r.margin == doctest::Approx(0.018154).epsilon(0.1));
    CHECK(r.positive);
    CHECK(r.third_case_zero);
    // Realized-draw estimate targets the same quantity.
    CHECK(std::abs(r.draw_margin - r.margin) < 4.0 * std::hypot(r.draw_se, r.margin_se));
    CHECK(r.sub_probability[0] + r.sub_probability[1] + r.sub_probability[2] == doctest::Approx(1.0));
    CHECK(r.sub_margin[0] + r.sub_margin[1] + r.sub_margin[2] == doctest::Approx(r.margin));
  }

  TEST_CASE("corollary margins on the disc") {
    const CorollaryReport r = audit_corollary_margins(ConvexBody::ball(2, 1.0, 1.0), cross_polytope_actions(2), 400000, 43, 1);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.separation == doctest::Approx(std::sqrt(2.0)));
    const double side = 4.0 * std::sqrt(2.0) / (3.0 * std::numbers::pi);
    for (const auto& row : r.rows) {
      CHECK(std::abs(row.probability - 0.25) < 4.0 * row.probability_se);
      CHECK(row.bound == doctest::Approx(0.125));
      CHECK(row.bound_holds);
      for (std::size_t j = 0; j < 4; ++j) {
        if (j == row.i) continue;
        // Opposite action doubles the gap.
        const double expect = (j / 2 == row.i / 2) ? 2.0 * side : side;
        CHECK(std::abs(row.conditional_margin[j] - expect) < 4.0 * row.conditional_se[j]);
      }
    }
    CHECK(r.passes);
  }

  TEST_CASE("first-round margins vanish under a centered prior") {
    LinearAuditConfig c;
    c.actions = circle_actions(5);
    c.replications = 200;
    c.n_inner = 50;
    c.jobs = 1;
    const BicReport r = estimate_bic_margin(c);
    for (const auto& row : r.rows) {
      CHECK(row.margin == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
      CHECK(row.certified);
    }
    REQUIRE(r.frequency_sums.size() == 1);
    CHECK(r.frequency_sums[0] == doctest::Approx(1.0));
  }

  TEST_CASE("first-round full-information margin is a half-normal mean") {
    LinearAuditConfig c;
    c.actions = ActionSet::unit({Vec::Unit(2, 0), Vec(-Vec::Unit(2, 0))});
    c.pairs = {{0, 1}};
    c.replications = 200000;
    c.n_inner = 4;
    c.jobs = 1;
    c.seed = 46;
    const BicReport r = estimate_bic_margin(c);
    REQUIRE(r.rows.size() == 1);
    // E[1{l_0 > 0} 2 l_0] = 2 E[(l_0)_+] = sqrt(2/π).
    CHECK(std::abs(r.rows[0].oracle_margin - std::sqrt(2.0 / std::numbers::pi)) < 3.0 * r.rows[0].oracle_se);
    CHECK(r.rows[0].margin == 0.0);
  }

  TEST_CASE("a single replication leaves the standard error unavailable") {
    LinearAuditConfig c;
    c.replications = 1;
    c.n_inner = 10;
    c.jobs = 1;
    const BicReport r = estimate_bic_margin(c);
    for (const auto& row : r.rows) {
      CHECK_FALSE(row.se_available);
      CHECK(row.certified);
    }
    CHECK(r.all_certified());
  }

  TEST_CASE("posterior and draw margins agree after exploration") {
    const BicReport r = estimate_bic_margin(disc_config());
    for (const auto& row : r.rows) {
      if (row.t != 5) continue;
      CHECK(std::abs(row.margin - row.draw_margin) < 4.5 * std::hypot(row.se, row.draw_se) + 1e-12);
    }
    for (double s : r.frequency_sums) CHECK(s == doctest::Approx(1.0));
  }

  TEST_CASE("audit is identical across worker counts") {
    auto c = disc_config();
    c.replications = 700;
    const BicReport one = estimate_bic_margin(c);
    c.jobs = 3;
    const BicReport three = estimate_bic_margin(c);
    CHECK(one.csv() == three.csv());
  }

  TEST_CASE("audit rejects malformed configurations") {
    auto c = disc_config();
    c.times = {9};
    CHECK_THROWS_AS(estimate_bic_margin(c), Error);
    c = disc_config();
    c.pairs = {{0, 7}};
    CHECK_THROWS_AS(estimate_bic_margin(c), Error);
    c = disc_config();
    c.times = {0};
    CHECK_THROWS_AS(estimate_bic_margin(c), Error);
  }

  TEST_CASE("decay probe inner means") {
    const DecayReport r = decay_probe_counterexample_2({3, 6}, 100000, 44, 1);
    REQUIRE(r.rows.size() == 2);
    for (const auto& row : r.rows) {
      CHECK(row.inner_exact == doctest::Approx((row.d - 1.0) / (8.0 * row.d)));
      CHECK(std::abs(row.inner_mean - row.inner_exact) < 4.0 * row.inner_se);
      CHECK(row.inner_matches);
      CHECK(row.tail >= 0.0);
    }
    CHECK(r.rows[1].tail <= r.rows[0].tail);
  }

  TEST_CASE("wrapping a vertex or a midpoint") {
    const BiasedPolytope p = biased_polytope(3);
    const Vec l = Vec::Constant(3, 0.4);
    Stream rng(47);
    const WrapResult at_vertex = simulate_extreme_point_wrapper(p.vertices, {p.vertices[1]}, l, rng);
    for (const auto& play : at_vertex.plays) CHECK(play.vertex == 1);

    const std::size_t a = 0, b = p.vertices.size() - 1;
    const Vec mid = 0.5 * (p.vertices[a] + p.vertices[b]);
    Moments fb;
    for (int k = 0; k < 100000; ++k)
      fb.add(simulate_extreme_point_wrapper(p.vertices, {mid}, l, rng).feedback[0]);
    const double expect = 0.5 * (0.5 * (1.0 + l.dot(p.vertices[a])) + 0.5 * (1.0 + l.dot(p.vertices[b])));
    CHECK(std::abs(fb.mean() - expect) < 4.0 * fb.standard_error());
  }

  TEST_CASE("extreme-point wrapper dominates the inner Gram matrix") {
    const BiasedPolytope p = biased_polytope(3);
    Stream rng(45);
    std::vector<Vec> inner;
    for (int k = 0; k < 12; ++k) {
      Vec x = Vec::Zero(3);
      double total = 0.0;
      std::vector<double> w(p.vertices.size());
      for (auto& v : w) total += (v = rng.gamma(1.0));
      for (std::size_t i = 0; i < w.size(); ++i) x += w[i] / total * p.vertices[i];
      inner.push_back(x);
    }
    const Vec l = Vec::Constant(3, 0.3);
    const WrapResult r = simulate_extreme_point_wrapper(p.vertices, inner, l, rng);
    CHECK(r.slots_per_step == 4);
    CHECK(r.plays.size() == inner.size() * 4);
    CHECK(r.feedback.size() == inner.size());
    CHECK(r.gram_gap >= -1e-12);
    CHECK(r.wrapped_gamma >= r.inner_gamma - 1e-12);
    CHECK(r.dominates);
    for (double f : r.feedback) CHECK((f == 0.0 || f == 1.0));
  }
}
