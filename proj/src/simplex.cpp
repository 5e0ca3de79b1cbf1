#include "csm/simplex.hpp"

#include <cmath>
#include <vector>

namespace csm::lp {

namespace {

constexpr double kEps = 1e-9;

// Full-tableau simplex over the current basis. Entering and leaving choices
// both follow Bland's rule (smallest index), so the iteration cannot cycle.
// `n_enterable` restricts entering candidates (excludes artificials in
// phase 2).
enum class LoopResult { Optimal, Unbounded, IterationLimit };

LoopResult pivot_loop(std::vector<std::vector<double>>& t, std::vector<double>& zrow,
                      double& zrhs, std::vector<int>& basis, std::size_t n_enterable,
                      int& iterations, int max_iterations) {
  const std::size_t m = t.size();
  const std::size_t width = zrow.size();  // number of variable columns
  while (true) {
    std::size_t enter = width;
    for (std::size_t j = 0; j < n_enterable; ++j) {
      if (zrow[j] < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter == width) return LoopResult::Optimal;

    std::size_t leave = m;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] > kEps) {
        const double ratio = t[i][width] / t[i][enter];
        if (leave == m || ratio < best_ratio - kEps ||
            (std::fabs(ratio - best_ratio) <= kEps && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave == m) return LoopResult::Unbounded;

    if (++iterations > max_iterations) return LoopResult::IterationLimit;

    // Pivot on (leave, enter).
    auto& prow = t[leave];
    const double pivot = prow[enter];
    for (std::size_t j = 0; j <= width; ++j) prow[j] /= pivot;
    prow[enter] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double factor = t[i][enter];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= width; ++j) t[i][j] -= factor * prow[j];
      t[i][enter] = 0.0;
    }
    const double zfactor = zrow[enter];
    if (zfactor != 0.0) {
      for (std::size_t j = 0; j < width; ++j) zrow[j] -= zfactor * prow[j];
      zrhs -= zfactor * prow[width];
      zrow[enter] = 0.0;
    }
    basis[leave] = static_cast<int>(enter);
  }
}

}  // namespace

Solution solve(const Problem& problem, int max_iterations) {
  const std::size_t m = problem.b.size();
  const std::size_t n = problem.c.size();
  Solution sol;
  if (problem.a.rows() != m || problem.a.cols() != n) {
    sol.status = Status::Infeasible;
    return sol;
  }

  const std::size_t width = n + m;  // structural + artificial columns
  std::vector<std::vector<double>> t(m, std::vector<double>(width + 1, 0.0));
  std::vector<int> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = problem.b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t[i][j] = sign * problem.a(i, j);
    t[i][n + i] = 1.0;
    t[i][width] = sign * problem.b[i];
    basis[i] = static_cast<int>(n + i);
  }

  // Phase 1: minimize the artificial sum. Reduced costs start as
  // c1 - (basis costs) * rows with basis costs all 1.
  std::vector<double> zrow(width, 0.0);
  double zrhs = 0.0;
  for (std::size_t j = n; j < width; ++j) zrow[j] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < width; ++j) zrow[j] -= t[i][j];
    zrhs -= t[i][width];
  }

  sol.iterations = 0;
  auto res = pivot_loop(t, zrow, zrhs, basis, width, sol.iterations, max_iterations);
  if (res == LoopResult::IterationLimit) {
    sol.status = Status::IterationLimit;
    return sol;
  }
  const double artificial_sum = -zrhs;
  if (artificial_sum > 1e-7) {
    sol.status = Status::Infeasible;
    return sol;
  }

  // Drive remaining artificials out of the basis where possible; rows with no
  // structural pivot are redundant constraints and stay parked at zero.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < static_cast<int>(n)) continue;
    std::size_t enter = width;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::fabs(t[i][j]) > kEps) {
        enter = j;
        break;
      }
    }
    if (enter == width) continue;
    auto& prow = t[i];
    const double pivot = prow[enter];
    for (std::size_t j = 0; j <= width; ++j) prow[j] /= pivot;
    prow[enter] = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (r == i) continue;
      const double factor = t[r][enter];
      if (factor == 0.0) continue;
      for (std::size_t j = 0; j <= width; ++j) t[r][j] -= factor * prow[j];
      t[r][enter] = 0.0;
    }
    basis[i] = static_cast<int>(enter);
  }

  // Phase 2 objective row from the real costs.
  zrow.assign(width, 0.0);
  zrhs = 0.0;
  for (std::size_t j = 0; j < n; ++j) zrow[j] = problem.c[j];
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= static_cast<int>(n)) continue;
    const double cb = problem.c[static_cast<std::size_t>(basis[i])];
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < width; ++j) zrow[j] -= cb * t[i][j];
    zrhs -= cb * t[i][width];
  }

  res = pivot_loop(t, zrow, zrhs, basis, n, sol.iterations, max_iterations);
  if (res == LoopResult::IterationLimit) {
    sol.status = Status::IterationLimit;
    return sol;
  }
  if (res == LoopResult::Unbounded) {
    sol.status = Status::Unbounded;
    return sol;
  }

  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < static_cast<int>(n))
      sol.x[static_cast<std::size_t>(basis[i])] = t[i][width];
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += problem.c[j] * sol.x[j];
  sol.objective = obj;
  sol.status = Status::Optimal;
  return sol;
}

}  // namespace csm::lp
