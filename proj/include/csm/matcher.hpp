#pragma once

#include <vector>

#include "csm/dataset.hpp"
#include "csm/distance.hpp"

namespace csm {

enum class MatchMethod { Radius, OneNn, Cem };

const char* to_string(MatchMethod method);

struct MatchedControl {
  int control_row;  // dataset row
  double distance;
};

// Matched sets are kept sorted by (distance, control id) and subsets break
// ties by treated id, so the whole pipeline depends on ids and values only:
// re-sorting the input rows leaves every estimate unchanged.
struct TreatedMatch {
  int treated_row;  // dataset row
  std::string treated_id;
  std::vector<MatchedControl> matched;
  double c_t = 0.0;      // realized caliper
  double d_t = 0.0;      // nearest-control distance
  bool feasible = false; // d_t <= spec.c
};

struct MatchResult {
  std::vector<TreatedMatch> units;  // one entry per treated unit, row order
  MatchMethod method = MatchMethod::Radius;
  CaliperSpec spec_used;

  std::size_t feasible_count() const;
  std::vector<int> feasible_treated_rows() const;
  std::vector<int> all_treated_rows() const;
  // Treated rows whose matched set is non-empty (always everything except
  // infeasible units under the fixed policy / empty CEM strata).
  std::vector<int> matched_treated_rows() const;
};

// Radius matching with replacement under the spec's policy:
//   Fixed:    C_t = {j : d[t][j] <= c}; unmatched units stay in the result
//             with an empty list.
//   Adaptive: c_t = max(c, alpha * d_t); never empty.
//   KBounded: c_t = max(d_(kmin), min(c, d_(kmax))) with d_(k) the k-th
//             smallest distance (clamped to the pool size); never empty.
// Closed balls throughout: ties at exactly c_t are matched.
MatchResult radius_match(const Dataset& ds, const DistanceMatrix& dm,
                         const CaliperSpec& spec);

// Each treated unit matched to its nearest control(s); exact ties all kept.
MatchResult one_nn_match(const Dataset& ds, const DistanceMatrix& dm);

// Coarsened exact matching: continuous covariates cut into `bins` equal-width
// intervals over [min, max] (top bin right-closed), binary covariates kept
// as-is; treated units match all controls with an identical bin signature.
MatchResult cem_match(const Dataset& ds, int bins = 5);

// Nested treated-row subsets ordered by ascending c_t: the feasible set
// first (when non-empty), then one infeasible unit at a time (ties broken by
// unit id). Each subset is sorted by dataset row.
std::vector<std::vector<int>> feasible_subsets(const MatchResult& mr);

}  // namespace csm
