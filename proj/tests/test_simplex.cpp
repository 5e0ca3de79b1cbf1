#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "csm/rng.hpp"
#include "csm/simplex.hpp"

using namespace csm;
using namespace csm::lp;

namespace {

Problem make_problem(const std::vector<std::vector<double>>& a,
                     std::vector<double> b, std::vector<double> c) {
  Problem prob;
  prob.a = Matrix(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) prob.a(i, j) = a[i][j];
  prob.b = std::move(b);
  prob.c = std::move(c);
  return prob;
}

}  // namespace

TEST_CASE("small known optimum") {
  // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4,  x1 + 3 x2 + s2 = 6
  const auto prob = make_problem({{1, 1, 1, 0}, {1, 3, 0, 1}}, {4, 6}, {-1, -2, 0, 0});
  const auto sol = solve(prob);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(-5.0));  // x = (3, 1)
  CHECK(sol.x[0] == doctest::Approx(3.0));
  CHECK(sol.x[1] == doctest::Approx(1.0));
}

TEST_CASE("negative rhs rows are handled by row normalization") {
  // x1 - x2 = -1, x1 + x2 = 3  ->  x = (1, 2); minimize x1
  const auto prob = make_problem({{1, -1}, {1, 1}}, {-1, 3}, {1, 0});
  const auto sol = solve(prob);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0));
  CHECK(sol.x[1] == doctest::Approx(2.0));
}

TEST_CASE("infeasible and unbounded are detected") {
  // x1 + x2 = -1 with x >= 0: infeasible
  CHECK(solve(make_problem({{1, 1}}, {-1}, {0, 0})).status == Status::Infeasible);
  // min -x1 s.t. x1 - x2 = 0: ray (t, t) drives the objective down
  CHECK(solve(make_problem({{1, -1}}, {0}, {-1, 0})).status == Status::Unbounded);
}

TEST_CASE("redundant constraints are tolerated") {
  const auto prob = make_problem({{1, 1}, {1, 1}, {2, 2}}, {2, 2, 4}, {1, 2});
  const auto sol = solve(prob);
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.objective == doctest::Approx(2.0));  // x = (2, 0)
}

TEST_CASE("random feasible problems solve to verified optima") {
  Rng rng(11);
  for (int rep = 0; rep < 150; ++rep) {
    const std::size_t m = 1 + rng.below(6);
    const std::size_t n = m + 1 + rng.below(8);
    Problem prob;
    prob.a = Matrix(m, n);
    std::vector<double> x0(n);
    for (auto& v : x0) v = rng.uniform01() < 0.4 ? 0.0 : rng.uniform(0.0, 3.0);
    prob.b.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        prob.a(i, j) = rng.uniform(-2.0, 2.0);
        prob.b[i] += prob.a(i, j) * x0[j];
      }
    }
    prob.c.resize(n);
    for (auto& v : prob.c) v = rng.uniform(0.0, 2.0);  // bounded below by 0

    const auto sol = solve(prob);
    REQUIRE(sol.status == Status::Optimal);
    // Feasibility of the returned point.
    for (std::size_t i = 0; i < m; ++i) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < n; ++j) lhs += prob.a(i, j) * sol.x[j];
      CHECK(lhs == doctest::Approx(prob.b[i]).epsilon(1e-7).scale(1.0));
    }
    for (double v : sol.x) CHECK(v >= -1e-9);
    // Optimality relative to the known feasible point.
    double obj0 = 0.0;
    for (std::size_t j = 0; j < n; ++j) obj0 += prob.c[j] * x0[j];
    CHECK(sol.objective <= obj0 + 1e-7);
  }
}
