#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "biclab/errors.hpp"
#include "biclab/lp.hpp"
#include "biclab/recgame.hpp"

using namespace biclab;

namespace {

SemibanditInstance two_singletons() {
  return SemibanditInstance(AtomPrior({{1, 1}, {1, 1}}, 1.0), {{0}, {1}});
}

GameSpec manual_game(const Mat& values, std::vector<std::size_t> menu, std::vector<std::size_t> responses) {
  GameSpec g;
  g.j = 1;
  g.signal = SignalSpec::infinite();
  g.menu = std::move(menu);
  g.responses = std::move(responses);
  g.values = values;
  g.weights.assign(static_cast<std::size_t>(values.rows()), 1.0 / static_cast<double>(values.rows()));
  g.enumerated = true;
  return g;
}

// The whole game as one LP over (π, t): max Σ t_a, t_a <= Σ_s w_s gap π_{s,a}, Σ_a π_{s,a} <= 1.
double full_lp_value(const GameSpec& g) {
  const Eigen::Index S = static_cast<Eigen::Index>(g.scenarios()), M = static_cast<Eigen::Index>(g.menu.size()),
                     R = static_cast<Eigen::Index>(g.responses.size());
  LinearProgram lp;
  lp.objective = Eigen::VectorXd::Zero(S * M + M);
  lp.objective.tail(M).setOnes();
  lp.rows = Eigen::MatrixXd::Zero(M * R + S, S * M + M);
  lp.rhs = Eigen::VectorXd::Zero(M * R + S);
  Eigen::Index r = 0;
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index b = 0; b < R; ++b, ++r) {
      lp.rows(r, S * M + a) = 1.0;
      for (Eigen::Index s = 0; s < S; ++s)
        lp.rows(r, s * M + a) = -g.weights[s] * g.gap(static_cast<std::size_t>(s), static_cast<std::size_t>(a),
                                                     static_cast<std::size_t>(b));
      lp.senses.push_back(RowSense::less_equal);
    }
  for (Eigen::Index s = 0; s < S; ++s, ++r) {
    for (Eigen::Index a = 0; a < M; ++a) lp.rows(r, s * M + a) = 1.0;
    lp.rhs[r] = 1.0;
    lp.senses.push_back(RowSense::less_equal);
  }
  const LpResult res = solve_lp(lp);
  REQUIRE(res.status == LpStatus::optimal);
  return res.value;
}

}  // namespace

TEST_SUITE("recgame") {
  TEST_CASE("finite-sample scenarios for one uniform atom") {
    const auto inst = two_singletons();
    Stream rng(61);
    SignalSpec sig;
    sig.samples = {1, 0};
    const GameSpec g = build_game(inst, 1, sig, 100, rng);
    REQUIRE(g.scenarios() == 2);
    CHECK(g.enumerated);
    for (std::size_t s = 0; s < 2; ++s) CHECK(g.weights[s] == doctest::Approx(0.5));
    std::vector<double> means{g.values(0, 0), g.values(1, 0)};
    std::sort(means.begin(), means.end());
    CHECK(means[0] == doctest::Approx(1.0 / 3.0));
    CHECK(means[1] == doctest::Approx(2.0 / 3.0));
    CHECK(g.values(0, 1) == doctest::Approx(0.5));
  }

  TEST_CASE("scenario counts and weights") {
    const auto inst = two_singletons();
    Stream rng(62);
    const GameSpec both = build_game(inst, 1, SignalSpec::finite_uniform(2, 1, 1), 100, rng);
    REQUIRE(both.scenarios() == 4);
    for (double w : both.weights) CHECK(w == doctest::Approx(0.25));
    SignalSpec none;
    none.samples = {0, 0};
    const GameSpec blind = build_game(inst, 1, none, 100, rng);
    REQUIRE(blind.scenarios() == 1);
    CHECK(blind.values(0, 0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(build_game(inst, 1, SignalSpec::infinite(), 9, rng), Error);
    for (std::size_t s = 0; s < both.scenarios(); ++s)
      for (Eigen::Index k = 0; k < both.values.cols(); ++k) {
        CHECK(both.values(static_cast<Eigen::Index>(s), k) >= 0.0);
        CHECK(both.values(static_cast<Eigen::Index>(s), k) <= 1.0);
      }
  }

  TEST_CASE("infinite-sample value on two uniform atoms") {
    Stream rng(63);
    const GameSpec g = build_game(two_singletons(), 1, SignalSpec::infinite(), 10000, rng);
    const GameSolution sol = solve_minimax(g);
    CHECK(std::abs(sol.value - 1.0 / 6.0) < 3.0 * sol.se);
    CHECK(sol.duality_gap <= 1e-8);
    CHECK(std::abs(sol.dual_bound - sol.value) <= 1e-8);
    CHECK(sol.policy.total == doctest::Approx(sol.value).epsilon(1e-8));
    CHECK(verify_padding(sol.policy, g).passes);
    // Plug-in value of the discretized game: weighted positive parts.
    double plug = 0.0;
    for (std::size_t s = 0; s < g.scenarios(); ++s) plug += g.weights[s] * std::max(0.0, g.gap(s, 0, 0));
    CHECK(sol.value == doctest::Approx(plug).epsilon(1e-9));
  }

  TEST_CASE("degenerate games") {
    Mat dominated(10, 2);
    Mat always(10, 2);
    for (int s = 0; s < 10; ++s) {
      dominated(s, 0) = (s + 0.5) / 10.0;
      dominated(s, 1) = 0.0;
      always(s, 0) = 0.0;
      always(s, 1) = (s + 0.5) / 10.0;
    }
    const GameSolution zero = solve_minimax(manual_game(dominated, {1}, {0}));
    CHECK(zero.value == doctest::Approx(0.0).scale(1.0));
    for (int s = 0; s < 10; ++s) CHECK(zero.policy.probs(s, 0) == doctest::Approx(0.0).scale(1.0));
    const GameSolution half = solve_minimax(manual_game(always, {1}, {0}));
    CHECK(half.value == doctest::Approx(0.5));
  }

  TEST_CASE("enumerated finite games match the positive-part oracle") {
    const auto inst = two_singletons();
    for (int n : {1, 2, 4, 8}) {
      Stream rng(64);
      const GameSpec g = build_game(inst, 1, SignalSpec::finite_uniform(2, 1, n), 100, rng);
      // Independent: E[(m_1 - m_0)_+] with Beta-binomial weights 1/(n+1) per count.
      double oracle = 0.0;
      for (int k0 = 0; k0 <= n; ++k0)
        for (int k1 = 0; k1 <= n; ++k1)
          oracle += std::max(0.0, (1.0 + k1) / (2.0 + n) - (1.0 + k0) / (2.0 + n)) / ((n + 1.0) * (n + 1.0));
      CHECK(solve_minimax(g).value == doctest::Approx(oracle).epsilon(1e-9));
    }
  }

  TEST_CASE("column generation agrees with the full program") {
    Stream rng(65);
    for (int trial = 0; trial < 15; ++trial) {
      const int S = 10 + static_cast<int>(rng.below(6));
      const int K = 3 + static_cast<int>(rng.below(3));
      Mat values(S, K);
      for (int s = 0; s < S; ++s)
        for (int k = 0; k < K; ++k) values(s, k) = rng.uniform();
      std::vector<std::size_t> menu, responses;
      for (int k = 0; k < K; ++k) (k < 2 ? menu : responses).push_back(static_cast<std::size_t>(k));
      const GameSpec g = manual_game(values, menu, responses);
      const GameSolution sol = solve_minimax(g);
      CHECK(sol.value == doctest::Approx(full_lp_value(g)).epsilon(1e-8));
      CHECK(sol.value >= 0.0);
      CHECK(verify_padding(sol.policy, g).passes);
      // Homogeneity under scaling.
      GameSpec scaled = g;
      scaled.values *= 3.0;
      CHECK(solve_minimax(scaled).value == doctest::Approx(3.0 * sol.value).epsilon(1e-8));
    }
  }

  TEST_CASE("padding certificates") {
    Stream rng(66);
    const GameSpec g = build_game(two_singletons(), 1, SignalSpec::infinite(), 2000, rng);
    PaddedPolicy idle;
    idle.j = 1;
    idle.probs = Mat::Zero(static_cast<Eigen::Index>(g.scenarios()), 1);
    idle.padding = {0.0};
    const PaddingCertificate c = verify_padding(idle, g);
    CHECK(c.passes);
    CHECK(c.recomputed[0] == 0.0);

    GameSolution sol = solve_minimax(g);
    REQUIRE(verify_padding(sol.policy, g).passes);
    PaddedPolicy bumped = sol.policy;
    Eigen::Index row = 0;
    while (bumped.probs(row, 0) > 0.5) ++row;
    bumped.probs(row, 0) += 0.05;
    const PaddingCertificate bad = verify_padding(bumped, g);
    CHECK(bad.max_deviation > 1e-8);
    CHECK_FALSE(bad.passes);

    PaddedPolicy wrong = sol.policy;
    wrong.probs = Mat::Zero(3, 1);
    CHECK_THROWS_AS(verify_padding(wrong, g), Error);
  }

  TEST_CASE("lifting a padded policy") {
    Stream rng(67);
    const GameSpec g = build_game(two_singletons(), 1, SignalSpec::infinite(), 2000, rng);
    const GameSolution sol = solve_minimax(g);
    const LiftedStrategy full = bic_lift(sol.policy, g, 1.0, 2.0);
    for (std::size_t b = 0; b < g.responses.size(); ++b) {
      double direct = 0.0;
      for (std::size_t s = 0; s < g.scenarios(); ++s)
        direct += g.weights[s] * sol.policy.probs(static_cast<Eigen::Index>(s), 0) * g.gap(s, 0, b);
      CHECK(full.gains(0, static_cast<Eigen::Index>(b)) == doctest::Approx(direct).epsilon(1e-12));
    }
    const double p = 2.0 / (2.0 + sol.value);
    const LiftedStrategy mixed = bic_lift(sol.policy, g, p, 2.0);
    CHECK(mixed.inequality_holds);
    CHECK(mixed.nonnegative);
    CHECK(mixed.q[0] == doctest::Approx(1.0));
    try {
      bic_lift(sol.policy, g, 0.5, 2.0);
      FAIL("expected a precondition violation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::precondition_violation);
    }
    Mat dominated = Mat::Zero(10, 2);
    for (int s = 0; s < 10; ++s) dominated(s, 0) = 0.5;
    const GameSpec flat = manual_game(dominated, {1}, {0});
    try {
      bic_lift(solve_minimax(flat).policy, flat, 1.0, 2.0);
      FAIL("expected lift_undefined");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::lift_undefined);
    }
  }

  TEST_CASE("easy game values") {
    Stream rng(68);
    const EasyGameResult r = easy_game_value(two_singletons(), 1, 10000, rng);
    CHECK(std::abs(r.value - 1.0 / 6.0) < 3.0 * r.se);
    CHECK(r.holds);
    const SemibanditInstance nested(AtomPrior({{1, 1}, {1, 1}}, 1.0), {{0}, {0, 1}});
    Stream rng2(69);
    const EasyGameResult n = easy_game_value(nested, 1, 10000, rng2);
    CHECK(std::abs(n.value - 0.5) < 3.0 * n.se);
  }

  TEST_CASE("finite-sample gap curve") {
    const auto inst = two_singletons();
    double last = -1.0;
    for (int n : {0, 1, 2, 4, 8}) {
      Stream rng(70);
      const GapResult r = finite_sample_gap(inst, 1, n, 10000, rng);
      if (n == 0) {
        CHECK(r.value == doctest::Approx(0.0).scale(1.0));
        CHECK(r.gap == doctest::Approx(r.infinite_value));
      }
      CHECK(r.value >= last - 1e-12);
      CHECK(r.holds);
      last = r.value;
    }
    Stream rng(71);
    const GapResult big = finite_sample_gap(inst, 1, 256, 10000, rng);
    CHECK(std::abs(big.value - 1.0 / 6.0) < 0.02);
    const std::string csv = sweep_csv({big}, 1);
    CHECK(csv.rfind("j,N,lambda,SE,lambda_inf,SE_inf,gap\n", 0) == 0);
  }
}
