#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biclab/rng.hpp"
#include "biclab/semibandit_instance.hpp"

namespace biclab {

enum class SignalKind { finite, infinite, easy };

/// Per-atom sample counts revealed to the planner. For the infinite and easy
/// games the counts are ignored.
struct SignalSpec {
  SignalKind kind = SignalKind::finite;
  std::vector<int> samples;

  static SignalSpec finite_uniform(std::size_t atoms, std::size_t j, int n);
  static SignalSpec infinite() { return {SignalKind::infinite, {}}; }
  static SignalSpec easy() { return {SignalKind::easy, {}}; }
};

/// A discretized j-recommendation game. values(s, k) is the conditional mean
/// reward of action k in scenario s, for every action of the instance.
struct GameSpec {
  std::size_t j = 0;
  SignalSpec signal;
  std::vector<std::size_t> menu;       // A_j
  std::vector<std::size_t> responses;  // A_{-j}
  std::vector<double> weights;
  Mat values;
  bool enumerated = false;
  /// Mixed-radix layout of enumerated scenarios: radix[i] = N_i + 1 for the
  /// informed atoms, scenario index = Σ k_i·stride[i].
  std::vector<std::size_t> informed, radix, stride;

  std::size_t scenarios() const { return weights.size(); }
  /// Gap θ̃_s(menu[a]) − θ̃_s(responses[b]).
  double gap(std::size_t s, std::size_t a, std::size_t b) const {
    return values(s, menu[a]) - values(s, responses[b]);
  }
  /// Scenario index for success counts of the informed atoms (enumerated only).
  std::size_t scenario_of(const std::vector<int>& successes) const;
  void validate() const;
  json to_json() const;
};

/// Planner strategy: probs(s, a) is the chance of recommending menu[a] in
/// scenario s; the remainder is do-nothing.
struct PaddedPolicy {
  std::size_t j = 0;
  Mat probs;
  std::vector<double> padding;
  double total = 0.0;

  json to_json() const;
};

struct GameSolution {
  double value = 0.0;
  PaddedPolicy policy;
  /// Agent's optimal mixed response per menu action (rows sum to 1 or 0).
  Mat agent;
  double dual_bound = 0.0;
  double duality_gap = 0.0;
  double se = 0.0;
  int columns = 0;
  int iterations = 0;

  json to_json() const;
};

GameSpec build_game(const SemibanditInstance& inst, std::size_t j, const SignalSpec& signal,
                    std::size_t scenario_count, Stream& rng);
GameSolution solve_minimax(const GameSpec& game);

struct PaddingCertificate {
  std::vector<double> recomputed;
  std::vector<std::size_t> argmin;
  double max_deviation = 0.0;
  double total = 0.0;
  bool passes = false;
};
PaddingCertificate verify_padding(const PaddedPolicy& policy, const GameSpec& game);

struct LiftedStrategy {
  double p = 1.0;
  std::vector<double> q;
  /// gains(a, b) = E[(θ_{A_a} − θ_{A_b})·1{π̂ = A_a}]; bounds(a) = p·λ_a − d(1−p)·q_a.
  Mat gains;
  std::vector<double> bounds;
  bool inequality_holds = false;
  bool nonnegative = false;
};
/// `scale` bounds |E[θ_A − θ_B]|; for Bernoulli atoms it is the atom count.
LiftedStrategy bic_lift(const PaddedPolicy& policy, const GameSpec& game, double p, double scale);

struct EasyGameResult {
  double value = 0.0;
  double se = 0.0;
  double infinite_value = 0.0;
  double infinite_se = 0.0;
  bool holds = false;
};
EasyGameResult easy_game_value(const SemibanditInstance& inst, std::size_t j,
                               std::size_t scenario_count, Stream& rng);

struct GapResult {
  int n = 0;
  double value = 0.0;
  double se = 0.0;
  double infinite_value = 0.0;
  double infinite_se = 0.0;
  double gap = 0.0;
  double threshold = 0.0;
  bool hypothesis = false;
  bool holds = true;
};
GapResult finite_sample_gap(const SemibanditInstance& inst, std::size_t j, int n,
                            std::size_t scenario_count, Stream& rng, double kappa = 1.0);

std::string sweep_csv(const std::vector<GapResult>& rows, std::size_t j);

}  // namespace biclab
