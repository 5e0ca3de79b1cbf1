#pragma once

#include <span>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/matcher.hpp"
#include "csm/scm.hpp"

namespace csm {

enum class Estimand { Satt, Fsatt, Subset };

const char* to_string(Estimand estimand);

struct EffectEstimate {
  double tau_hat = 0.0;
  bool has_se = false;  // false when no cluster has >= 2 controls
  double se_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double level = 0.95;
  double s2 = 0.0;           // pooled residual variance
  double ess_control = 0.0;  // ESS of aggregated control weights
  double ess_treated = 0.0;  // = n_treated_used (uniform treated weights)
  int n_treated_used = 0;
  int n_clusters_used = 0;  // clusters entering the pooled variance
  Estimand estimand = Estimand::Subset;
};

// tau_hat = mean over the subset of (Y_t - sum_j w_jt Y_j). Every row in
// `subset` must carry weights in `ws`.
double att_point_estimate(const Dataset& ds, const WeightSet& ws,
                          std::span<const int> subset);

// Effective sample size (sum w)^2 / sum w^2.
double ess(std::span<const double> weights);

// Total weight per distinct control across the subset's treated units,
// returned as (control row, aggregated weight) sorted by row.
std::vector<std::pair<int, double>> aggregate_control_weights(
    const WeightSet& ws, std::span<const int> subset);

struct PooledVariance {
  double s2 = 0.0;
  int n_clusters = 0;
  int n_c_total = 0;  // sum of retained cluster sizes
};

// Within-cluster residual variance pooled across matched sets with >= 2
// controls, uniform weights inside each cluster; clusters of size 1 are
// dropped (also from N_C). Throws NoMultiUnitClusters when nothing remains.
PooledVariance pooled_residual_variance(const Dataset& ds, const MatchResult& mr);
PooledVariance pooled_residual_variance(const Dataset& ds, const MatchResult& mr,
                                        std::span<const int> subset);

// sqrt(s2 * (1/n_T + 1/ess_control)).
double plug_in_se(double s2, double n_treated, double ess_control);

// Inverse standard normal CDF (Wichura's AS241, double precision).
double normal_quantile(double p);

// Assembles the full estimate over `subset` (treated dataset rows). The
// estimand label is Fsatt when the subset equals the feasible set, Satt when
// it equals all treated units, Subset otherwise. When no cluster has >= 2
// controls the point estimate is still produced with has_se = false.
EffectEstimate estimate(const Dataset& ds, const MatchResult& mr,
                        const WeightSet& ws, std::span<const int> subset,
                        double level = 0.95);

}  // namespace csm
