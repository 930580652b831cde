#include "biclab/lp.hpp"

#include <cmath>

#include "biclab/errors.hpp"

namespace biclab {

namespace {

class Tableau {
 public:
  Tableau(int rows, int cols) : t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  double& at(int r, int c) { return t_(r, c); }
  double at(int r, int c) const { return t_(r, c); }
  int rows() const { return static_cast<int>(t_.rows()) - 1; }
  int cols() const { return static_cast<int>(t_.cols()) - 1; }
  double rhs(int r) const { return t_(r, cols()); }
  std::vector<int>& basis() { return basis_; }

  // Objective row holds reduced costs d_j = c_B B^-1 a_j - c_j (minimizing form
  // of "maximize": a column improves when d_j < 0).
  double reduced(int c) const { return t_(rows(), c); }

  void pivot(int pr, int pc) {
    const double p = t_(pr, pc);
    t_.row(pr) /= p;
    for (int r = 0; r <= rows(); ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f != 0.0) t_.row(r) -= f * t_.row(pr);
    }
    basis_[static_cast<std::size_t>(pr)] = pc;
  }

  void set_objective(const Eigen::VectorXd& cost) {
    // cost indexed by column; row = -cost then eliminate basic columns.
    t_.row(rows()).setZero();
    for (int c = 0; c < cols(); ++c) t_(rows(), c) = -cost[c];
    for (int r = 0; r < rows(); ++r) {
      const int b = basis_[static_cast<std::size_t>(r)];
      const double f = t_(rows(), b);
      if (f != 0.0) t_.row(rows()) -= f * t_.row(r);
    }
  }

  double objective_value() const { return t_(rows(), cols()); }

  // Returns false when unbounded; `allowed` filters entering columns.
  LpStatus optimize(const std::vector<bool>& allowed, double tol, int& pivots, int max_pivots) {
    for (;;) {
      if (pivots >= max_pivots) return LpStatus::iteration_limit;
      int enter = -1;
      for (int c = 0; c < cols(); ++c) {
        if (allowed[static_cast<std::size_t>(c)] && reduced(c) < -tol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return LpStatus::optimal;
      int leave = -1;
      double best = 0.0;
      for (int r = 0; r < rows(); ++r) {
        const double a = t_(r, enter);
        if (a > tol) {
          const double ratio = rhs(r) / a;
          if (leave < 0 || ratio < best - tol ||
              (std::abs(ratio - best) <= tol && basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
            leave = r;
            best = ratio;
          }
        }
      }
      if (leave < 0) return LpStatus::unbounded;
      pivot(leave, enter);
      ++pivots;
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const int m = static_cast<int>(lp.rows.rows());
  const int n = static_cast<int>(lp.rows.cols());
  if (lp.objective.size() != n || lp.rhs.size() != m || static_cast<int>(lp.senses.size()) != m)
    throw Error(ErrorCode::invalid_input, "linear program dimensions disagree");
  const double tol = options.tolerance;

  // Normalize to nonnegative right-hand sides.
  Eigen::MatrixXd a = lp.rows;
  Eigen::VectorXd b = lp.rhs;
  std::vector<RowSense> sense = lp.senses;
  std::vector<double> flip(static_cast<std::size_t>(m), 1.0);
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      a.row(i) *= -1.0;
      b[i] = -b[i];
      flip[static_cast<std::size_t>(i)] = -1.0;
      if (sense[static_cast<std::size_t>(i)] == RowSense::less_equal)
        sense[static_cast<std::size_t>(i)] = RowSense::greater_equal;
      else if (sense[static_cast<std::size_t>(i)] == RowSense::greater_equal)
        sense[static_cast<std::size_t>(i)] = RowSense::less_equal;
    }
  }

  // Columns: structural | slack/surplus per inequality row | artificial per >=/= row.
  std::vector<int> slack_col(static_cast<std::size_t>(m), -1), art_col(static_cast<std::size_t>(m), -1);
  int cols = n;
  for (int i = 0; i < m; ++i)
    if (sense[static_cast<std::size_t>(i)] != RowSense::equal) slack_col[static_cast<std::size_t>(i)] = cols++;
  const int first_art = cols;
  for (int i = 0; i < m; ++i)
    if (sense[static_cast<std::size_t>(i)] != RowSense::less_equal) art_col[static_cast<std::size_t>(i)] = cols++;

  Tableau tab(m, cols);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tab.at(i, j) = a(i, j);
    const auto si = static_cast<std::size_t>(i);
    if (slack_col[si] >= 0) tab.at(i, slack_col[si]) = sense[si] == RowSense::less_equal ? 1.0 : -1.0;
    if (art_col[si] >= 0) tab.at(i, art_col[si]) = 1.0;
    tab.at(i, cols) = b[i];
    tab.basis()[si] = sense[si] == RowSense::less_equal ? slack_col[si] : art_col[si];
  }

  LpResult result;
  int pivots = 0;
  std::vector<bool> allowed(static_cast<std::size_t>(cols), true);

  if (first_art < cols) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(cols);
    for (int c = first_art; c < cols; ++c) phase1[c] = -1.0;
    tab.set_objective(phase1);
    const LpStatus s = tab.optimize(allowed, tol, pivots, options.max_pivots);
    result.infeasibility = -tab.objective_value();
    if (s == LpStatus::iteration_limit) {
      result.status = s;
      result.pivots = pivots;
      return result;
    }
    if (result.infeasibility > tol * std::max(1.0, b.lpNorm<Eigen::Infinity>())) {
      result.status = LpStatus::infeasible;
      result.pivots = pivots;
      return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (tab.basis()[static_cast<std::size_t>(r)] < first_art) continue;
      for (int c = 0; c < first_art; ++c) {
        if (std::abs(tab.at(r, c)) > tol) {
          tab.pivot(r, c);
          ++pivots;
          break;
        }
      }
    }
    for (int c = first_art; c < cols; ++c) allowed[static_cast<std::size_t>(c)] = false;
  }

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols);
  cost.head(n) = lp.objective;
  tab.set_objective(cost);
  const LpStatus s = tab.optimize(allowed, tol, pivots, options.max_pivots);
  result.status = s;
  result.pivots = pivots;
  if (s != LpStatus::optimal) return result;

  result.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < m; ++r) {
    const int bcol = tab.basis()[static_cast<std::size_t>(r)];
    if (bcol < n) result.x[bcol] = tab.rhs(r);
  }
  result.value = lp.objective.dot(result.x);

  // y_i = c_B B^-1 e_i, read from the column that started as e_i.
  result.duals = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const int unit_col = sense[si] == RowSense::less_equal ? slack_col[si] : art_col[si];
    double y = 0.0;
    for (int r = 0; r < m; ++r) {
      const int bcol = tab.basis()[static_cast<std::size_t>(r)];
      y += cost[bcol] * tab.at(r, unit_col);
    }
    result.duals[i] = y * flip[si];
  }
  return result;
}

LpResult solve_lp_free(const LinearProgram& lp, const LpOptions& options) {
  const auto n = lp.rows.cols();
  LinearProgram split;
  split.objective.resize(2 * n);
  split.objective << lp.objective, -lp.objective;
  split.rows.resize(lp.rows.rows(), 2 * n);
  split.rows << lp.rows, -lp.rows;
  split.rhs = lp.rhs;
  split.senses = lp.senses;
  LpResult r = solve_lp(split, options);
  if (r.status == LpStatus::optimal) {
    Eigen::VectorXd x = r.x.head(n) - r.x.tail(n);
    r.x = x;
  }
  return r;
}

}  // namespace biclab
