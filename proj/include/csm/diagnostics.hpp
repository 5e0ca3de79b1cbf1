#pragma once

#include <vector>

#include "csm/dataset.hpp"
#include "csm/distance.hpp"
#include "csm/estimator.hpp"
#include "csm/matcher.hpp"
#include "csm/scm.hpp"

namespace csm {

struct BalanceRow {
  std::size_t covariate;  // index into column_names
  double treated_mean = 0.0;
  double control_mean = 0.0;  // weighted
  double abs_diff = 0.0;
  double bound = 0.0;  // c * pi_k
  bool within_bound = false;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  double joint_distance = 0.0;  // d_V(Xbar_T, Xbar_C)
  double joint_bound = 0.0;     // c
  bool joint_within = false;
  int subset_size = 0;
};

BalanceReport balance_report(const Dataset& ds, const WeightSet& ws,
                             std::span<const int> subset, const CaliperSpec& spec);

struct LovePlotRow {
  int subset_index = 0;
  int subset_size = 0;
  double max_c_t = 0.0;
  BalanceReport report;
};

// One balance report per nested subset from feasible_subsets(mr).
std::vector<LovePlotRow> love_plot_series(const Dataset& ds, const MatchResult& mr,
                                          const WeightSet& ws, const CaliperSpec& spec);

struct FrontierRow {
  int subset_index = 0;
  int subset_size = 0;
  double max_c_t = 0.0;
  EffectEstimate estimate;
};

// Estimate-estimand frontier: one effect estimate per nested subset.
std::vector<FrontierRow> frontier_series(const Dataset& ds, const MatchResult& mr,
                                         const WeightSet& ws, const CaliperSpec& spec,
                                         double level = 0.95);

struct RankHistogram {
  int rank = 1;  // 1 = nearest
  std::vector<double> edges;  // n_bins + 1, shared across ranks
  std::vector<int> counts;    // n_bins
  double q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0;
};

// For each rank r = 1..k, the distribution of the r-th smallest distance per
// treated unit, binned with equal-width bins over the range pooled across all
// ranks (shared axes). Used to pick the global caliper.
std::vector<RankHistogram> topk_distance_histogram(const DistanceMatrix& dm, int k,
                                                   int n_bins = 30);

// Weighted point cloud; masses sum to 1.
struct EmpiricalMeasure {
  Matrix points;               // n x p
  std::vector<double> masses;  // n

  void validate() const;
};

EmpiricalMeasure treated_measure(const Dataset& ds, std::span<const int> subset);
EmpiricalMeasure control_measure(const Dataset& ds, const WeightSet& ws,
                                 std::span<const int> subset);

inline constexpr std::size_t kWassersteinMaxPoints = 64;

// Exact q-Wasserstein distance between two small empirical measures, by
// solving the optimal-transport LP with the in-repo simplex. Test oracle for
// the joint-balance bound; capped at kWassersteinMaxPoints per side.
double wasserstein_exact(const EmpiricalMeasure& ft, const EmpiricalMeasure& fc,
                         const ScalingMatrix& v, Norm norm, double q = 1.0);

// Cost of the explicit matched-pairs coupling (each treated unit paired with
// its own weighted controls): (sum_t (1/n) sum_j w_jt d(X_t,X_j)^q)^(1/q).
// Upper-bounds the exact Wasserstein value.
double coupling_cost(const Dataset& ds, const WeightSet& ws,
                     std::span<const int> subset, const ScalingMatrix& v,
                     Norm norm, double q = 1.0);

}  // namespace csm
