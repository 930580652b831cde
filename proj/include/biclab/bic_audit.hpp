#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biclab/geometry.hpp"
#include "biclab/linear_ts.hpp"
#include "biclab/priors.hpp"
#include "biclab/stats.hpp"

namespace biclab {

inline constexpr double kCertifyZ = 2.58;

struct MarginRow {
  int t = 0;
  std::size_t i = 0, j = 0;
  /// E[p_i (μ_i - μ_j)], with p_i = P^t[A* = A_i] and μ the posterior mean.
  double margin = 0.0;
  double se = 0.0;
  /// Same target estimated through the realized Thompson draw:
  /// E[1{A^(t) = A_i} (μ_i - μ_j)].
  double draw_margin = 0.0;
  double draw_se = 0.0;
  /// E[1{A* = A_i} <l*, A_i - A_j>], the full-information margin.
  double oracle_margin = 0.0;
  double oracle_se = 0.0;
  double frequency = 0.0;  // P̂[A^(t) = A_i]
  std::size_t replications = 0;
  bool undefined = false;   // conditioning frequency is zero
  bool certified = false;   // margin >= -z se (true when se is unavailable)
  bool se_available = true;
};

struct BicReport {
  std::vector<MarginRow> rows;
  std::vector<int> times;
  std::vector<double> frequency_sums;  // per time, Σ_i P̂[A^(t) = A_i]
  std::uint64_t seed = 0;
  std::string config_hash;
  double conditioning_fraction = 1.0;

  bool all_certified() const;
  std::string csv() const;
  json to_json() const;
};

struct LinearAuditConfig {
  LinearPrior prior = LinearPrior::gaussian(Mat::Identity(2, 2));
  ActionSet actions = cross_polytope_actions(2);
  ObsModel obs;
  /// Deterministic actions played before Thompson sampling is audited.
  PolicySpec schedule;
  std::vector<int> times{1};
  /// Empty means every ordered pair i != j.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t replications = 10000;
  std::size_t n_inner = 2000;
  double z = kCertifyZ;
  std::uint64_t seed = 1;
  unsigned jobs = 0;
  std::string config_hash;
};

BicReport estimate_bic_margin(const LinearAuditConfig& config);

struct CorollaryRow {
  std::size_t i = 0;
  double probability = 0.0;
  double probability_se = 0.0;
  double bound = 0.0;  // (rε/4)^d
  bool bound_holds = false;
  /// Per alternative j: E[<l, A_i - A_j> | A* = A_i] and its SE, and the
  /// unconditional E[1{A* = A_i} <l, A_i - A_j>].
  std::vector<double> conditional_margin, conditional_se, joint_margin;
};

struct CorollaryReport {
  std::vector<CorollaryRow> rows;
  double separation = 0.0;
  double regularity = 0.0;
  bool passes = false;
  std::string csv() const;
  json to_json() const;
};

CorollaryReport audit_corollary_margins(const ConvexBody& body, const ActionSet& actions, std::size_t replications,
                                        std::uint64_t seed, unsigned jobs = 0);

struct CounterexampleOneReport {
  double margin = 0.0;       // E[(θ_3 - θ_1) 1{A^(2) = A_1}], exact inner probabilities
  double margin_se = 0.0;
  double draw_margin = 0.0;  // same through the realized draw and true l*
  double draw_se = 0.0;
  double recommend_probability = 0.0;  // P[A^(2) = A_1]
  double conditional_margin = 0.0;     // margin / probability
  double conditional_se = 0.0;
  /// Contributions split by A^(1) ∈ {A_1, A_2, A_3}, and the A_1-or-A_2 union.
  double sub_margin[3] = {0, 0, 0};
  double sub_se[3] = {0, 0, 0};
  double sub_probability[3] = {0, 0, 0};
  double first_two_margin = 0.0;
  double first_two_se = 0.0;
  std::size_t replications = 0;
  bool positive = false;        // margin - z se > 0
  bool third_case_zero = false; // |sub_margin[2]| <= z sub_se[2]
  json to_json() const;
};

/// TS at t = 1 and t = 2 under N(0, Σ) with a noiseless observation of the
/// first reward. Defaults reproduce the standard instance.
CounterexampleOneReport run_counterexample_1(std::size_t replications, std::uint64_t seed, unsigned jobs = 0,
                                             const Mat& covariance = Mat::Identity(2, 2),
                                             const std::vector<Vec>& actions = {});

/// The three actions (1,0), (-1,0), (1.8,0.6).
std::vector<Vec> counterexample_1_actions();

struct DecayRow {
  int d = 0;
  double tail = 0.0;  // E[(1/10 - <l*, A_1>)_+]
  double tail_se = 0.0;
  bool censored = false;
  double inner_mean = 0.0;  // E[<l*, A_1>]
  double inner_se = 0.0;
  double inner_exact = 0.0;  // (d-1)/(8d)
  bool inner_matches = false;
};

struct DecayReport {
  std::vector<DecayRow> rows;
  LinearFit fit;  // log(tail) against d over uncensored rows
  bool passes = false;
  std::string csv() const;
  json to_json() const;
};

DecayReport decay_probe_counterexample_2(const std::vector<int>& dims, std::size_t replications, std::uint64_t seed,
                                         unsigned jobs = 0);

struct WrappedPlay {
  std::size_t inner_step = 0;
  std::size_t vertex = 0;
  double reward = 0.0;
};

struct WrapResult {
  std::vector<WrappedPlay> plays;
  std::vector<double> feedback;  // one selected reward per inner step
  std::size_t slots_per_step = 0;
  double inner_gamma = 0.0;
  double wrapped_gamma = 0.0;
  double gram_gap = 0.0;  // λ_min(wrapped G - inner G)
  bool dominates = false;
};

/// Replaces each inner action by its vertex decomposition, padded to d+1
/// plays, and forwards the reward of one play chosen with the decomposition
/// weights. Vertex rewards are Bernoulli((1 + <l*, v>)/2).
WrapResult simulate_extreme_point_wrapper(const PolytopeVertexSet& vertices, const std::vector<Vec>& inner_actions,
                                          const Vec& l_star, Stream& rng);

}  // namespace biclab
