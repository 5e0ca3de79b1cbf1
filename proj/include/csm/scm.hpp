#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/matcher.hpp"
#include "csm/matrix.hpp"

namespace csm {

enum class WeightScheme { Scm, Uniform, OneNn };

const char* to_string(WeightScheme scheme);

struct ScmSolution {
  std::vector<double> weights;  // on the simplex exactly (renormalized)
  double imbalance = 0.0;       // d_V(x_t, sum_j w_j X_j), recomputed
  int iterations = 0;
};

// Convex weights minimizing the scaled Linf imbalance, via the LP
//   min y  s.t.  -y <= [V (x_t - sum_j w_j X_j)]_k <= y,  sum w = 1,  w >= 0
// solved exactly by the in-repo simplex. `controls` is m x p, one matched
// control per row. Weight vectors are generally non-unique; only the
// imbalance value is contractual.
ScmSolution scm_weights_linf(std::span<const double> x_t, const Matrix& controls,
                             const ScalingMatrix& v, double tol = 1e-8);

// Convex weights minimizing the scaled L2 imbalance (projection of x_t onto
// the convex hull of the controls), via fully-corrective Frank-Wolfe with
// exact affine minimization over the active set. Stops when the duality gap
// is <= tol^2 (or at the numerical floor).
ScmSolution scm_weights_l2(std::span<const double> x_t, const Matrix& controls,
                           const ScalingMatrix& v, double tol = 1e-8,
                           int max_iterations = 10000);

struct UnitWeights {
  int treated_row;
  std::vector<std::pair<int, double>> weights;  // (control dataset row, w)
  double imbalance = 0.0;
  bool skipped = false;  // empty matched set; unit carries no weights
};

struct WeightSet {
  std::vector<UnitWeights> units;  // aligned with MatchResult::units
  WeightScheme scheme = WeightScheme::Uniform;

  const UnitWeights* find(int treated_row) const;
};

// Applies the scheme per treated unit over its matched set. Units with empty
// matched sets are flagged, never silently averaged. SCM minimizes the
// scaled imbalance in `scm_norm` when given (LP for Linf, QP for L2),
// otherwise in spec.norm; matching geometry and projection norm are
// independent choices.
WeightSet assign_weights(const MatchResult& mr, const Dataset& ds,
                         const CaliperSpec& spec, WeightScheme scheme,
                         double tol = 1e-8, int threads = 1,
                         std::optional<Norm> scm_norm = std::nullopt);

}  // namespace csm
