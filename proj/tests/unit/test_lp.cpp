#include <doctest.h>

#include <Eigen/LU>

#include <cmath>
#include <limits>

#include "biclab/lp.hpp"
#include "biclab/rng.hpp"

using namespace biclab;

namespace {

LinearProgram program(Eigen::VectorXd c, Eigen::MatrixXd a, Eigen::VectorXd b, std::vector<RowSense> senses) {
  return {std::move(c), std::move(a), std::move(b), std::move(senses)};
}

// Best objective over all vertices of { x >= 0, A x <= b } in the plane.
double vertex_enumeration(const Eigen::Vector2d& c, const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  std::vector<Eigen::Vector3d> lines;  // n . x = rhs
  for (Eigen::Index i = 0; i < a.rows(); ++i) lines.emplace_back(a(i, 0), a(i, 1), b(i));
  lines.emplace_back(1, 0, 0);
  lines.emplace_back(0, 1, 0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lines.size(); ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      Eigen::Matrix2d m;
      m << lines[i][0], lines[i][1], lines[j][0], lines[j][1];
      if (std::abs(m.determinant()) < 1e-12) continue;
      const Eigen::Vector2d x = m.inverse() * Eigen::Vector2d(lines[i][2], lines[j][2]);
      if (x.minCoeff() < -1e-9) continue;
      if (((a * x - b).array() > 1e-9).any()) continue;
      best = std::max(best, c.dot(x));
    }
  return best;
}

}  // namespace

TEST_SUITE("lp") {
  TEST_CASE("textbook program and its duals") {
    Eigen::MatrixXd a(3, 2);
    a << 1, 0, 0, 2, 3, 2;
    const auto r = solve_lp(program(Eigen::Vector2d(3, 5), a, Eigen::Vector3d(4, 12, 18),
                                    {RowSense::less_equal, RowSense::less_equal, RowSense::less_equal}));
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(36.0));
    CHECK(r.x[0] == doctest::Approx(2.0));
    CHECK(r.x[1] == doctest::Approx(6.0));
    CHECK(r.duals[0] == doctest::Approx(0.0));
    CHECK(r.duals[1] == doctest::Approx(1.5));
    CHECK(r.duals[2] == doctest::Approx(1.0));
  }

  TEST_CASE("infeasible and unbounded programs are reported") {
    Eigen::MatrixXd a(2, 1);
    a << 1, 1;
    auto infeasible = solve_lp(program(Eigen::VectorXd::Ones(1), a, Eigen::Vector2d(1, 2),
                                       {RowSense::less_equal, RowSense::greater_equal}));
    CHECK(infeasible.status == LpStatus::infeasible);

    Eigen::MatrixXd u(1, 2);
    u << 1, -1;
    auto unbounded = solve_lp(program(Eigen::Vector2d(1, 1), u, Eigen::VectorXd::Ones(1), {RowSense::less_equal}));
    CHECK(unbounded.status == LpStatus::unbounded);
  }

  TEST_CASE("equality rows and free variables") {
    // max x + y s.t. x + y = 3, x - y >= 1 → any point on the segment, value 3.
    Eigen::MatrixXd a(2, 2);
    a << 1, 1, 1, -1;
    auto r = solve_lp(program(Eigen::Vector2d(1, 1), a, Eigen::Vector2d(3, 1), {RowSense::equal, RowSense::greater_equal}));
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.value == doctest::Approx(3.0));
    CHECK(r.x[0] - r.x[1] >= 1.0 - 1e-9);

    // max -|x| style: max -x s.t. x >= -2 with x free → x = -2.
    Eigen::MatrixXd f(1, 1);
    f << 1;
    auto free = solve_lp_free(program(-Eigen::VectorXd::Ones(1), f, -2.0 * Eigen::VectorXd::Ones(1), {RowSense::greater_equal}));
    REQUIRE(free.status == LpStatus::optimal);
    CHECK(free.x[0] == doctest::Approx(-2.0));
  }

  TEST_CASE("random planar programs agree with vertex enumeration") {
    Stream rng(77);
    for (int trial = 0; trial < 60; ++trial) {
      const int m = 2 + static_cast<int>(rng.below(5));
      Eigen::MatrixXd a(m, 2);
      Eigen::VectorXd b(m);
      for (int i = 0; i < m; ++i) {
        a(i, 0) = rng.uniform(0.1, 2.0);
        a(i, 1) = rng.uniform(0.1, 2.0);
        b[i] = rng.uniform(0.5, 3.0);
      }
      const Eigen::Vector2d c(rng.uniform(-1.0, 2.0), rng.uniform(-1.0, 2.0));
      auto r = solve_lp(program(c, a, b, std::vector<RowSense>(static_cast<std::size_t>(m), RowSense::less_equal)));
      REQUIRE(r.status == LpStatus::optimal);
      CHECK(r.value == doctest::Approx(vertex_enumeration(c, a, b)).epsilon(1e-9));
      // strong duality and dual feasibility
      CHECK(b.dot(r.duals) == doctest::Approx(r.value).epsilon(1e-9));
      CHECK((r.duals.array() >= -1e-12).all());
      CHECK(((c - a.transpose() * r.duals).array() <= 1e-9).all());
    }
  }
}
