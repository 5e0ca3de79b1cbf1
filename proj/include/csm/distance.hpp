#pragma once

#include <span>
#include <string>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/matrix.hpp"

namespace csm {

// Scaled distance between two covariate vectors:
//   L2:   sqrt(sum_k ((x_k - y_k) * v_k)^2)
//   Linf: max_k |(x_k - y_k) * v_k|
// The per-covariate operation order is fixed (k ascending, no fusing), so
// recomputing any DistanceMatrix entry through this function reproduces it
// bit-exactly.
double scaled_distance(std::span<const double> x, std::span<const double> y,
                       const ScalingMatrix& v, Norm norm);

struct DistanceMatrix {
  Matrix d;  // n_treated x n_controls
  std::vector<std::string> treated_ids;
  std::vector<std::string> control_ids;
  std::vector<int> treated_rows;  // dataset row of each treated unit
  std::vector<int> control_rows;

  std::size_t n_treated() const { return d.rows(); }
  std::size_t n_controls() const { return d.cols(); }
};

// Brute-force treated x control matrix. Parallel over treated rows when
// threads > 1; entries are independent of scheduling and thread count.
DistanceMatrix distance_matrix(const Dataset& ds, const CaliperSpec& spec,
                               int threads = 1);

}  // namespace csm
