#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biclab/bic_audit.hpp"
#include "biclab/recgame.hpp"
#include "biclab/semibandit_instance.hpp"

namespace biclab {

/// P[first n samples of every atom i < j are zero], exact for Beta atoms.
double epsilon_j(const SemibanditInstance& inst, int n, std::size_t j);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};
McEstimate epsilon_j_monte_carlo(const SemibanditInstance& inst, int n, std::size_t j,
                                 std::size_t replications, std::uint64_t seed);

/// ⌈(20d/τ)^{1+α}·log(20d/τ)·guard⌉.
long long n_lower_bound(const SemibanditInstance& inst, double guard = 1.0);

/// E[θ_a | ZEROS_{<j,n}].
double zeros_posterior_mean(const SemibanditInstance& inst, int n, std::size_t j, std::size_t a);

/// E[θ | x] for the mixed signal x = max(1{ZEROS_{<j,n}}, b), b ~ Ber(q).
std::vector<double> signal_atom_means(const SemibanditInstance& inst, int n, std::size_t j, double q,
                                      bool x);

struct GreedyChoice {
  std::size_t action = 0;
  bool has_new_atom = false;  // intersects atoms j, j+1, ...
};
GreedyChoice greedy_after_zeros(const SemibanditInstance& inst, int n, std::size_t j);
GreedyChoice greedy_after_signal(const SemibanditInstance& inst, int n, std::size_t j, double q, bool x);

struct AtomOrder {
  std::vector<int> order;  // sorted atom i is original atom order[i]
  SemibanditInstance sorted;
};
/// Orders atoms so that atom j is new in the mixed-signal greedy action of
/// stage j. Throws precondition_violation when some stage finds no new atom.
AtomOrder sort_atoms(const SemibanditInstance& inst, int n);

struct LikelihoodRatioCheck {
  double threshold = 0.0;  // τ/(5d)
  double worst = 0.0;      // max_a<j P[θ_a ≥ threshold | ZEROS]
  bool holds = false;
};
LikelihoodRatioCheck likelihood_ratio_check(const SemibanditInstance& inst, long long n, std::size_t j);

struct EpsShapeRow {
  std::size_t d = 0;
  int n = 0;
  double log_inverse = 0.0;
  double bound = 0.0;
  bool holds = false;
};
/// Calibrates κ = log(1/ε_d)/(d^{1+α}n^α) on uniform atoms at (2, 4) and checks
/// log(1/ε_d) ≤ κ·d^{1+α}·n^α on the grid.
std::vector<EpsShapeRow> eps_shape_probe(const std::vector<std::size_t>& dims,
                                         const std::vector<int>& samples, double alpha,
                                         double* kappa_out = nullptr);

enum class Phase { initial, exploit, padded };
const char* to_string(Phase p);

struct Stage {
  std::size_t j = 0;
  double epsilon = 0.0;
  int iterations = 0;
  GameSpec game;
  GameSolution solution;
  std::vector<double> q;  // padding shares over the menu
  std::size_t exploit_x0 = 0, exploit_x1 = 0;
  /// Row a < |menu| for π̂ = menu[a], last row for do-nothing; one column per action.
  Mat informed, uninformed;
};

struct Algorithm1Spec {
  SemibanditInstance instance;  // atoms already sorted
  std::vector<int> order;
  int n = 0;
  double lambda_floor = 0.0;
  double lambda = 0.0;
  std::size_t prior_greedy = 0;
  std::vector<Stage> stages;  // stages[k] is atom k + 1
  long long budget = 0;
  double asymptotic_budget = 0.0;

  /// Recommendation after a z = 1 block given π̂ (menu index or -1).
  std::size_t padded_recommendation(const Stage& stage, double p_signal, int pick) const;
  json to_json() const;
};

/// Sorts atoms, solves the enumerated n-informed game for every stage and
/// sets λ = λ̲/2d unless `lambda_override` is positive.
Algorithm1Spec prepare_algorithm1(const SemibanditInstance& inst, int n, double lambda_override = 0.0);

struct StepRecord {
  long long time = 0;
  Phase phase = Phase::initial;
  std::size_t stage = 0;
  std::size_t action = 0;
  std::vector<int> feedback;
  double p = 0.0;
  int x = 0, b = 0, y = 0, z = 0;
};

struct ExplorationTranscript {
  std::vector<double> theta;
  std::vector<StepRecord> steps;
  std::vector<long long> counts;
  std::vector<int> first_successes;
  std::vector<int> iterations;
  long long budget = 0;

  std::vector<double> first_means() const;
  /// Recounts counters and first-N successes from the step records.
  bool counters_consistent(const SemibanditInstance& inst) const;
  std::string csv(const SemibanditInstance& inst) const;

  int n = 0;  // samples per atom that define the first-N counts
};

ExplorationTranscript run_algorithm1(const Algorithm1Spec& spec, Stream& rng);

struct BlockMarginRow {
  std::size_t block = 0;
  std::string kind;  // initial, stage-start or loop (a loop block is exploit or padded)
  std::size_t stage = 0;
  int iteration = -1;
  std::size_t action = 0, alternative = 0;
  double margin = 0.0, se = 0.0, frequency = 0.0;
  bool under_sampled = false, certified = true;
};

struct TranscriptAudit {
  std::vector<BlockMarginRow> rows;
  std::size_t replications = 0;
  double z = kCertifyZ;
  bool all_certified = true;
  std::size_t under_sampled = 0;

  std::string csv() const;
  json to_json() const;
};

/// Monte Carlo margins E[(θ_A − θ_{A'})·1{recommend A}] per block class.
TranscriptAudit audit_transcript_bic(const Algorithm1Spec& spec, std::size_t replications,
                                     std::uint64_t seed, int jobs = 0, double z = kCertifyZ);

}  // namespace biclab
