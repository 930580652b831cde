#include <doctest.h>

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "biclab/errors.hpp"
#include "biclab/linear_ts.hpp"
#include "biclab/stats.hpp"

using namespace biclab;

namespace {

ActionSet basis(int d) {
  std::vector<Vec> vs;
  for (int i = 0; i < d; ++i) vs.push_back(Vec::Unit(d, i));
  return ActionSet::unit(vs);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_SUITE("linear_ts") {
  TEST_CASE("link constants") {
    const LinkFunction id = LinkFunction::from_string("identity");
    CHECK(link_constants(id).m == 1.0);
    CHECK(link_constants(id).M == 1.0);
    const LinkFunction lg = LinkFunction::from_string("logistic");
    CHECK(lg.name() == "logistic");
    const LinkConstants c = link_constants(lg);
    CHECK(c.M == doctest::Approx(0.25));
    CHECK(c.m == doctest::Approx(std::exp(1.0) / ((1.0 + std::exp(1.0)) * (1.0 + std::exp(1.0)))));
    for (double x : {-1.0, -0.3, 0.0, 0.8}) {
      CHECK(lg.value(x) == doctest::Approx(logistic(x)));
      CHECK(lg.derivative(x) == doctest::Approx((lg.value(x + 1e-6) - lg.value(x - 1e-6)) / 2e-6).epsilon(1e-6));
    }
    CHECK_THROWS_AS(LinkFunction::from_string("probit"), Error);
  }

  TEST_CASE("gamma thresholds") {
    const double lin = gamma_threshold(3, 100.0, 0.5, 0.1, 2.0);
    CHECK(lin == doctest::Approx(2.0 * 81.0 * std::log(100.0) * std::log(80.0) / (0.25 * 0.01)));
    const LinkConstants c{0.2, 0.25};
    const double glm = gamma_threshold(3, 100.0, 0.5, 0.1, 2.0, ThresholdVariant::glm, c);
    CHECK(glm == doctest::Approx(2.0 * 0.0625 * 27.0 * std::log(80.0) / (0.25 * std::pow(0.2, 4) * 0.01)));
    // Linear in C.
    CHECK(gamma_threshold(2, 10.0, 1.0, 0.2, 6.0) == doctest::Approx(3.0 * gamma_threshold(2, 10.0, 1.0, 0.2, 2.0)));
  }

  TEST_CASE("round robin gives a scaled identity Gram matrix") {
    for (int d : {2, 3, 4}) {
      const int gamma = 7;
      Stream rng(static_cast<std::uint64_t>(d));
      const auto t = run_episode(LinearPrior::gaussian(Mat::Identity(d, d)), basis(d), ObsModel{},
                                 round_robin_schedule(d, d * gamma), d * gamma, rng);
      CHECK((t.history.gram() - gamma * Mat::Identity(d, d)).norm() < 1e-12);
      CHECK(t.history.gamma() == doctest::Approx(gamma));
      CHECK(t.steps.size() == static_cast<std::size_t>(d * gamma));
    }
  }

  TEST_CASE("spectral floor never decreases") {
    Stream rng(26);
    const auto t = run_episode(LinearPrior::gaussian(Mat::Identity(3, 3)), cross_polytope_actions(3), ObsModel{},
                               PolicySpec{}, 60, rng);
    double last = 0.0;
    for (const auto& s : t.steps) {
      CHECK(s.gamma >= last - 1e-12);
      last = s.gamma;
    }
  }

  TEST_CASE("posterior error scale after spectral exploration") {
    // Subgaussian norm of l* - posterior mean against sqrt(d log t / γ), with the
    // constant fixed at d = 2.
    const int gamma = 20;
    auto scaled_norm = [&](int d) {
      Stream rng(static_cast<std::uint64_t>(30 + d));
      const int t = d * gamma;
      const LinearPrior prior = LinearPrior::gaussian(Mat::Identity(d, d));
      std::vector<Vec> dirs;
      for (int i = 0; i < d; ++i) dirs.push_back(Vec::Unit(d, i));
      const ActionSet basis = ActionSet::unit(dirs);
      std::vector<Vec> errors;
      for (int rep = 0; rep < 5000; ++rep) {
        const auto tr = run_episode(prior, basis, ObsModel{}, round_robin_schedule(d, t), t, rng);
        errors.push_back(tr.l_star - posterior_mean(condition(prior, tr.history, ObsModel{}, rng), rng));
      }
      dirs.push_back(Vec::Ones(d).normalized());
      return std::pair{subgaussian_norm_estimate(errors, dirs), std::sqrt(d * std::log(t) / gamma)};
    };
    const auto [n2, s2] = scaled_norm(2);
    const double kappa = n2 / s2;
    for (int d : {3, 4}) {
      const auto [n, scale] = scaled_norm(d);
      CHECK(n <= kappa * scale);
    }
  }

  TEST_CASE("identity-link MLE is least squares") {
    Stream rng(21);
    SpectralHistory h(3);
    for (int k = 0; k < 40; ++k) {
      Vec a(3);
      for (int i = 0; i < 3; ++i) a[i] = rng.normal();
      h.push(-1, a.normalized(), rng.normal());
    }
    const GlmFit fit = glm_mle(h, LinkFunction{LinkKind::identity});
    const Mat X = h.design();
    const Vec ls = X.colPivHouseholderQr().solve(h.rewards());
    CHECK((fit.estimate - ls).norm() < 1e-10);
  }

  TEST_CASE("logistic MLE solves the score equation") {
    Stream rng(22);
    Vec truth(2);
    truth << 0.4, -0.3;
    for (int rep = 0; rep < 10; ++rep) {
      SpectralHistory h(2);
      for (int k = 0; k < 200; ++k) {
        const Vec a = Vec::Unit(2, k % 2);
        h.push(k % 2, a, rng.bernoulli(logistic(a.dot(truth))) ? 1.0 : 0.0);
      }
      const LinkFunction lg{LinkKind::logistic};
      const GlmFit fit = glm_mle(h, lg);
      Vec score = Vec::Zero(2);
      for (const auto& s : h.steps()) score += (s.reward - lg.value(s.action.dot(fit.estimate))) * s.action;
      CHECK(score.norm() <= 1e-10);
      CHECK(fit.residual <= 1e-10);
    }
  }

  TEST_CASE("rank-deficient histories are rejected") {
    SpectralHistory h(2);
    h.push(0, Vec::Unit(2, 0), 1.0);
    h.push(0, Vec::Unit(2, 0), 0.0);
    try {
      glm_mle(h, LinkFunction{LinkKind::logistic});
      FAIL("expected rank_deficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::rank_deficient);
    }
  }

  TEST_CASE("thompson step plays the best action for its draw") {
    const ActionSet acts = circle_actions(6);
    GaussianPosterior g{Vec::Zero(2), Mat::Identity(2, 2), Mat::Identity(2, 2)};
    const PosteriorState state = g;
    Stream rng(23);
    for (int k = 0; k < 200; ++k) {
      Vec draw;
      const std::size_t a = thompson_step(state, acts, rng, &draw);
      CHECK(a == best_action(acts, draw));
    }
  }

  TEST_CASE("thompson selection frequency") {
    // P[x_0 > x_1] for x ~ N((0.5, 0), I) is Φ(0.5/√2).
    Vec mean(2);
    mean << 0.5, 0.0;
    const PosteriorState state = GaussianPosterior{mean, Mat::Identity(2, 2), Mat::Identity(2, 2)};
    Stream rng(24);
    Moments hits;
    for (int k = 0; k < 100000; ++k) hits.add(thompson_step(state, basis(2), rng) == 0 ? 1.0 : 0.0);
    CHECK(std::abs(hits.mean() - normal_cdf(0.5 / std::sqrt(2.0))) < 4.0 * hits.standard_error());
  }

  TEST_CASE("transcript csv") {
    Stream rng(25);
    const auto t = run_episode(LinearPrior::gaussian(Mat::Identity(2, 2)), basis(2), ObsModel{}, round_robin_schedule(2, 4),
                               4, rng);
    const std::string csv = transcript_csv(t);
    CHECK(csv.rfind("time,action_index,action_vector,reward,gamma\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK_THROWS_AS(run_episode(LinearPrior::gaussian(Mat::Identity(2, 2)), basis(2), ObsModel{},
                                round_robin_schedule(2, 2), 4, rng),
                    Error);
  }

  TEST_CASE("glm concentration probe") {
    GlmProbeConfig cfg;
    cfg.C = 0.1;
    cfg.replications = 4000;
    cfg.jobs = 1;
    const GlmProbeResult r = glm_concentration_probe(cfg);
    const LinkConstants c = link_constants(LinkFunction{LinkKind::logistic});
    const double expect = std::ceil(0.1 * c.M * c.M / std::pow(c.m, 4) * (4.0 + std::log(20.0)));
    CHECK(r.gamma == static_cast<int>(expect));
    CHECK(r.radius_factor == doctest::Approx(1.0 / (c.m * std::sqrt(r.gamma))));
    CHECK(r.max_residual <= 1e-10);
    CHECK(r.frequency <= cfg.delta);
    CHECK(r.passes);
  }
}
