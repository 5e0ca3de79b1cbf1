#pragma once

#include <vector>

#include "csm/matrix.hpp"

namespace csm::lp {

// Dense two-phase primal simplex for the small LPs in this project (synthetic
// control weights, exact optimal transport). Bland's rule for both entering
// and leaving variables, so cycling is impossible.
//
//   minimize    c^T x
//   subject to  A x = b,  x >= 0
struct Problem {
  Matrix a;               // m x n
  std::vector<double> b;  // m
  std::vector<double> c;  // n
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Solution {
  Status status = Status::IterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  int iterations = 0;
};

Solution solve(const Problem& problem, int max_iterations = 200000);

}  // namespace csm::lp
