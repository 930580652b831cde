#pragma once

#include <vector>

#include "biclab/json_io.hpp"
#include "biclab/priors.hpp"

namespace biclab {

/// Independent Beta atoms and a family of atom subsets. Atoms and actions are
/// 0-based; action order is the tie-breaking order.
class SemibanditInstance {
 public:
  SemibanditInstance() = default;
  SemibanditInstance(AtomPrior prior, std::vector<std::vector<int>> actions);

  std::size_t atoms() const { return prior_.size(); }
  std::size_t size() const { return actions_.size(); }
  const AtomPrior& prior() const { return prior_; }
  const std::vector<std::vector<int>>& actions() const { return actions_; }
  const std::vector<int>& action(std::size_t k) const { return actions_[k]; }

  /// Indices of actions containing atom j (A_j) and avoiding it (A_{-j}).
  const std::vector<std::size_t>& containing(std::size_t j) const { return containing_[j]; }
  const std::vector<std::size_t>& avoiding(std::size_t j) const { return avoiding_[j]; }

  /// Σ_{a ∈ A_k} means[a].
  double action_value(std::size_t k, const std::vector<double>& atom_means) const;
  /// argmax_k action_value, ties to the smallest index.
  std::size_t greedy(const std::vector<double>& atom_means) const;
  std::vector<double> prior_means() const;

  /// Relabels atoms: new atom i is old atom order[i]. Action indices are kept.
  SemibanditInstance reordered(const std::vector<int>& order) const;

  json to_json() const;
  static SemibanditInstance from_json(const json& j);

 private:
  AtomPrior prior_;
  std::vector<std::vector<int>> actions_;
  std::vector<std::vector<std::size_t>> containing_, avoiding_;
};

}  // namespace biclab
