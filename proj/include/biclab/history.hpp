#pragma once

#include <vector>

#include "biclab/geometry.hpp"

namespace biclab {

struct Step {
  int time = 0;
  int action_index = -1;  // -1 when the action is not from an indexed set
  Vec action;
  double reward = 0.0;
};

/// Played actions and rewards with the running Gram matrix and its smallest
/// eigenvalue.
class SpectralHistory {
 public:
  explicit SpectralHistory(int dim = 0);

  void push(int action_index, const Vec& action, double reward);

  int dim() const { return dim_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  const std::vector<Step>& steps() const { return steps_; }
  const Mat& gram() const { return gram_; }
  /// λ_min of the Gram matrix; 0 for an empty history.
  double gamma() const { return gamma_; }

  /// Actions stacked as rows, and the reward vector.
  Mat design() const;
  Vec rewards() const;

 private:
  int dim_;
  std::vector<Step> steps_;
  Mat gram_;
  double gamma_ = 0.0;
};

double spectral_floor(const SpectralHistory& history);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& symmetric);

}  // namespace biclab
