#include "csm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace csm {

const char* to_string(Estimand estimand) {
  switch (estimand) {
    case Estimand::Satt: return "SATT";
    case Estimand::Fsatt: return "FSATT";
    case Estimand::Subset: return "SUBSET";
  }
  return "?";
}

double att_point_estimate(const Dataset& ds, const WeightSet& ws,
                          std::span<const int> subset) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "no treated units in subset");
  double total = 0.0;
  for (int row : subset) {
    const UnitWeights* unit = ws.find(row);
    if (unit == nullptr)
      fail(ErrorCode::InvalidArgument,
           "treated unit " + ds.ids[static_cast<std::size_t>(row)] + " carries no weights");
    double counterfactual = 0.0;
    for (const auto& [control_row, w] : unit->weights)
      counterfactual += w * ds.y[static_cast<std::size_t>(control_row)];
    total += ds.y[static_cast<std::size_t>(row)] - counterfactual;
  }
  return total / static_cast<double>(subset.size());
}

double ess(std::span<const double> weights) {
  double sum = 0.0, sum_sq = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail(ErrorCode::InvalidArgument, "negative weight in ESS");
    sum += w;
    sum_sq += w * w;
  }
  if (sum <= 0.0) fail(ErrorCode::AllZeroWeights, "ESS of all-zero weights");
  return sum * sum / sum_sq;
}

std::vector<std::pair<int, double>> aggregate_control_weights(
    const WeightSet& ws, std::span<const int> subset) {
  std::map<int, double> totals;
  for (int row : subset) {
    const UnitWeights* unit = ws.find(row);
    if (unit == nullptr) continue;
    for (const auto& [control_row, w] : unit->weights) totals[control_row] += w;
  }
  return {totals.begin(), totals.end()};
}

namespace {

PooledVariance pooled_over(const Dataset& ds, const MatchResult& mr,
                           const std::vector<const TreatedMatch*>& clusters) {
  (void)mr;
  PooledVariance out;
  double weighted_sum = 0.0;
  for (const TreatedMatch* unit : clusters) {
    const std::size_t size = unit->matched.size();
    if (size < 2) continue;
    double mean = 0.0;
    for (const auto& mc : unit->matched)
      mean += ds.y[static_cast<std::size_t>(mc.control_row)];
    mean /= static_cast<double>(size);
    double ss = 0.0;
    for (const auto& mc : unit->matched) {
      const double e = ds.y[static_cast<std::size_t>(mc.control_row)] - mean;
      ss += e * e;
    }
    const double s2_t = ss / static_cast<double>(size - 1);
    weighted_sum += static_cast<double>(size) * s2_t;
    out.n_c_total += static_cast<int>(size);
    out.n_clusters += 1;
  }
  if (out.n_clusters == 0)
    fail(ErrorCode::NoMultiUnitClusters,
         "no matched set has >= 2 controls; pooled variance unavailable");
  out.s2 = weighted_sum / static_cast<double>(out.n_c_total);
  return out;
}

}  // namespace

PooledVariance pooled_residual_variance(const Dataset& ds, const MatchResult& mr) {
  std::vector<const TreatedMatch*> clusters;
  for (const auto& unit : mr.units) clusters.push_back(&unit);
  return pooled_over(ds, mr, clusters);
}

PooledVariance pooled_residual_variance(const Dataset& ds, const MatchResult& mr,
                                        std::span<const int> subset) {
  std::vector<const TreatedMatch*> clusters;
  for (int row : subset) {
    for (const auto& unit : mr.units) {
      if (unit.treated_row == row) {
        clusters.push_back(&unit);
        break;
      }
    }
  }
  return pooled_over(ds, mr, clusters);
}

double plug_in_se(double s2, double n_treated, double ess_control) {
  if (s2 < 0.0 || n_treated <= 0.0 || ess_control <= 0.0)
    fail(ErrorCode::InvalidArgument, "plug_in_se inputs out of range");
  return std::sqrt(s2 * (1.0 / n_treated + 1.0 / ess_control));
}

// AS241 (Wichura 1988): rational approximations on three regions, accurate to
// about 1e-15 in double precision.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    fail(ErrorCode::InvalidArgument, "normal_quantile needs p in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

EffectEstimate estimate(const Dataset& ds, const MatchResult& mr, const WeightSet& ws,
                        std::span<const int> subset, double level) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "no treated units in subset");
  if (!(level > 0.0 && level < 1.0))
    fail(ErrorCode::InvalidArgument, "confidence level must be in (0,1)");

  EffectEstimate est;
  est.level = level;
  est.tau_hat = att_point_estimate(ds, ws, subset);
  est.n_treated_used = static_cast<int>(subset.size());
  est.ess_treated = static_cast<double>(subset.size());

  const auto aggregated = aggregate_control_weights(ws, subset);
  std::vector<double> control_weights;
  control_weights.reserve(aggregated.size());
  for (const auto& [row, w] : aggregated) control_weights.push_back(w);
  est.ess_control = ess(control_weights);

  try {
    const auto pooled = pooled_residual_variance(ds, mr, subset);
    est.s2 = pooled.s2;
    est.n_clusters_used = pooled.n_clusters;
    est.se_hat = plug_in_se(pooled.s2, est.ess_treated, est.ess_control);
    const double z = normal_quantile(0.5 + level / 2.0);
    est.ci_lo = est.tau_hat - z * est.se_hat;
    est.ci_hi = est.tau_hat + z * est.se_hat;
    est.has_se = true;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NoMultiUnitClusters) throw;
    est.has_se = false;
    est.ci_lo = est.ci_hi = est.tau_hat;
  }

  // Estimand label: compare against the feasible set and the full roster.
  std::vector<int> sorted_subset(subset.begin(), subset.end());
  std::sort(sorted_subset.begin(), sorted_subset.end());
  auto feasible = mr.feasible_treated_rows();
  std::sort(feasible.begin(), feasible.end());
  auto all_rows = mr.all_treated_rows();
  std::sort(all_rows.begin(), all_rows.end());
  if (sorted_subset == feasible) est.estimand = Estimand::Fsatt;
  else if (sorted_subset == all_rows) est.estimand = Estimand::Satt;
  else est.estimand = Estimand::Subset;
  return est;
}

}  // namespace csm
