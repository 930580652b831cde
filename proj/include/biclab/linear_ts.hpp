#pragma once

#include <string>
#include <vector>

#include "biclab/geometry.hpp"
#include "biclab/history.hpp"
#include "biclab/priors.hpp"
#include "biclab/rng.hpp"

namespace biclab {

/// Draws l ~ posterior and plays best_action(actions, l). The draw is written
/// to `draw` when given.
std::size_t thompson_step(const PosteriorState& posterior, const ActionSet& actions, Stream& rng, Vec* draw = nullptr);

enum class LinkKind { identity, logistic };

struct LinkFunction {
  LinkKind kind = LinkKind::identity;

  double value(double x) const;
  double derivative(double x) const;
  static LinkFunction from_string(const std::string& name);
  std::string name() const;
};

struct LinkConstants {
  double m = 1.0;  // inf of χ' on [-1, 1]
  double M = 1.0;  // sup of χ' on [-1, 1]
};

/// Analytic constants, verified against a 1e-4 grid including endpoints.
LinkConstants link_constants(const LinkFunction& link);

enum class ThresholdVariant { linear, glm };

/// linear: C d^4 log(t) log(4/(rε)) / (r² ε²)
/// glm:    C M² d³ log(4/(rε)) / (r² m⁴ ε²)
double gamma_threshold(int d, double t, double r, double eps, double C, ThresholdVariant variant = ThresholdVariant::linear,
                       LinkConstants link = {});

struct GlmFit {
  Vec estimate;
  double residual = 0.0;  // norm of the score
  int iterations = 0;
};

/// Damped Newton on Σ (R_s - χ(<A_s, l>)) A_s = 0.
GlmFit glm_mle(const SpectralHistory& history, const LinkFunction& link, double tolerance = 1e-10, int max_iterations = 100);

struct PolicySpec {
  enum class Kind { thompson, schedule, greedy };
  Kind kind = Kind::thompson;
  std::vector<std::size_t> schedule;  // action indices, one per step
};

struct EpisodeStep {
  Vec posterior_mean;
  double gamma = 0.0;
};

struct Transcript {
  Vec l_star;  // for auditing only
  SpectralHistory history;
  std::vector<EpisodeStep> steps;
};

/// Draws l* from the prior once and runs `horizon` steps of the policy.
Transcript run_episode(const LinearPrior& prior, const ActionSet& actions, const ObsModel& obs, const PolicySpec& policy,
                       int horizon, Stream& rng, const ConditionOptions& options = {});

/// CSV with columns time,action_index,action_vector,reward,gamma.
std::string transcript_csv(const Transcript& transcript);

/// e_1, ..., e_d repeated; step s plays e_{s mod d}.
PolicySpec round_robin_schedule(int dim, int horizon);

struct GlmProbeConfig {
  int dim = 2;
  double C = 1.0;
  double delta = 0.05;
  std::size_t replications = 20000;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
};

struct GlmProbeResult {
  int gamma = 0;
  double radius_factor = 0.0;  // 1 / (m_χ sqrt γ), times |v| = 1
  double frequency = 0.0;
  double standard_error = 0.0;
  std::size_t nonconverged = 0;
  double max_residual = 0.0;  // over converged fits
  bool passes = false;
};

/// γ = ⌈C M²/m⁴ (d² + log 1/δ)⌉ rounds of e_1..e_d with logistic Bernoulli
/// rewards; counts |<l̂ - l*, v>| > |v|/(m_χ √γ) for v = (1,...,1)/√d.
/// Non-converged fits count as exceedances.
GlmProbeResult glm_concentration_probe(const GlmProbeConfig& config);

}  // namespace biclab
