#pragma once

#include <Eigen/Core>
#include <vector>

namespace biclab {

enum class RowSense { less_equal, equal, greater_equal };

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

/// maximize  c'x  subject to  row_i' x (<=|=|>=) rhs_i,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd objective;
  Eigen::MatrixXd rows;
  Eigen::VectorXd rhs;
  std::vector<RowSense> senses;
};

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  /// Row multipliers y with c - A'y <= 0 on every column at optimum;
  /// y >= 0 for <= rows and y <= 0 for >= rows.
  Eigen::VectorXd duals;
  /// Phase-one infeasibility (sum of artificials) at termination.
  double infeasibility = 0.0;
  int pivots = 0;
};

struct LpOptions {
  double tolerance = 1e-9;
  int max_pivots = 200000;
};

/// Dense two-phase tableau simplex with Bland's anti-cycling rule. Intended
/// for the small programs in this library (tens to a few hundred columns).
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Convenience for programs with free variables: x = x_plus - x_minus.
LpResult solve_lp_free(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace biclab
