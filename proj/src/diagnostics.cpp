#include "csm/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "csm/io_util.hpp"
#include "csm/simplex.hpp"

namespace csm {

BalanceReport balance_report(const Dataset& ds, const WeightSet& ws,
                             std::span<const int> subset, const CaliperSpec& spec) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "balance report over empty subset");
  const std::size_t p = ds.p();
  const double inv_n = 1.0 / static_cast<double>(subset.size());

  std::vector<double> treated_mean(p, 0.0), control_mean(p, 0.0);
  for (int row : subset) {
    const UnitWeights* unit = ws.find(row);
    if (unit == nullptr)
      fail(ErrorCode::InvalidArgument,
           "treated unit " + ds.ids[static_cast<std::size_t>(row)] + " carries no weights");
    const auto x_t = ds.x.row(static_cast<std::size_t>(row));
    for (std::size_t k = 0; k < p; ++k) treated_mean[k] += inv_n * x_t[k];
    for (const auto& [control_row, w] : unit->weights) {
      const auto x_j = ds.x.row(static_cast<std::size_t>(control_row));
      for (std::size_t k = 0; k < p; ++k) control_mean[k] += inv_n * w * x_j[k];
    }
  }

  BalanceReport report;
  report.subset_size = static_cast<int>(subset.size());
  const ScalingMatrix v = scaling_matrix(spec);
  for (std::size_t k = 0; k < p; ++k) {
    BalanceRow row;
    row.covariate = k;
    row.treated_mean = treated_mean[k];
    row.control_mean = control_mean[k];
    row.abs_diff = std::fabs(treated_mean[k] - control_mean[k]);
    row.bound = spec.c * spec.pi[k];
    row.within_bound = row.abs_diff <= row.bound;
    report.rows.push_back(row);
  }
  report.joint_distance = scaled_distance(treated_mean, control_mean, v, spec.norm);
  report.joint_bound = spec.c;
  report.joint_within = report.joint_distance <= report.joint_bound;
  return report;
}

namespace {

// Nested analysis sets: feasible_subsets minus units that carry no weights
// (possible under the fixed policy, where infeasible units stay unmatched).
// Consecutive duplicates created by the filtering collapse to one subset.
std::vector<std::vector<int>> analysis_subsets(const MatchResult& mr,
                                               const WeightSet& ws) {
  std::vector<std::vector<int>> out;
  for (auto& subset : feasible_subsets(mr)) {
    std::vector<int> usable;
    for (int row : subset)
      if (ws.find(row) != nullptr) usable.push_back(row);
    if (usable.empty()) continue;
    if (!out.empty() && out.back() == usable) continue;
    out.push_back(std::move(usable));
  }
  return out;
}

}  // namespace

std::vector<LovePlotRow> love_plot_series(const Dataset& ds, const MatchResult& mr,
                                          const WeightSet& ws, const CaliperSpec& spec) {
  std::vector<LovePlotRow> series;
  const auto subsets = analysis_subsets(mr, ws);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    LovePlotRow row;
    row.subset_index = static_cast<int>(i);
    row.subset_size = static_cast<int>(subsets[i].size());
    row.max_c_t = 0.0;
    for (int treated_row : subsets[i]) {
      for (const auto& unit : mr.units)
        if (unit.treated_row == treated_row) row.max_c_t = std::max(row.max_c_t, unit.c_t);
    }
    row.report = balance_report(ds, ws, subsets[i], spec);
    series.push_back(std::move(row));
  }
  return series;
}

std::vector<FrontierRow> frontier_series(const Dataset& ds, const MatchResult& mr,
                                         const WeightSet& ws, const CaliperSpec& spec,
                                         double level) {
  (void)spec;
  std::vector<FrontierRow> series;
  const auto subsets = analysis_subsets(mr, ws);
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    FrontierRow row;
    row.subset_index = static_cast<int>(i);
    row.subset_size = static_cast<int>(subsets[i].size());
    row.max_c_t = 0.0;
    for (int treated_row : subsets[i]) {
      for (const auto& unit : mr.units)
        if (unit.treated_row == treated_row) row.max_c_t = std::max(row.max_c_t, unit.c_t);
    }
    row.estimate = estimate(ds, mr, ws, subsets[i], level);
    series.push_back(row);
  }
  return series;
}

std::vector<RankHistogram> topk_distance_histogram(const DistanceMatrix& dm, int k,
                                                   int n_bins) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  if (n_bins < 1) fail(ErrorCode::InvalidArgument, "n_bins must be >= 1");
  if (dm.n_controls() < static_cast<std::size_t>(k))
    fail(ErrorCode::InsufficientControls,
         "need at least " + std::to_string(k) + " controls, have " +
             std::to_string(dm.n_controls()));

  // r-th smallest distance per treated unit, r = 1..k.
  std::vector<std::vector<double>> by_rank(static_cast<std::size_t>(k));
  std::vector<double> row_sorted;
  for (std::size_t t = 0; t < dm.n_treated(); ++t) {
    const auto row = dm.d.row(t);
    row_sorted.assign(row.begin(), row.end());
    std::sort(row_sorted.begin(), row_sorted.end());
    for (int r = 0; r < k; ++r)
      by_rank[static_cast<std::size_t>(r)].push_back(row_sorted[static_cast<std::size_t>(r)]);
  }

  // Shared equal-width bins over the range pooled across all ranks.
  double lo = by_rank[0][0], hi = by_rank[0][0];
  for (const auto& values : by_rank)
    for (double value : values) {
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }
  const double width = hi - lo;

  std::vector<RankHistogram> result;
  for (int r = 0; r < k; ++r) {
    RankHistogram hist;
    hist.rank = r + 1;
    hist.edges.resize(static_cast<std::size_t>(n_bins) + 1);
    for (int b = 0; b <= n_bins; ++b)
      hist.edges[static_cast<std::size_t>(b)] =
          lo + width * static_cast<double>(b) / static_cast<double>(n_bins);
    hist.counts.assign(static_cast<std::size_t>(n_bins), 0);
    auto& values = by_rank[static_cast<std::size_t>(r)];
    for (double value : values) {
      int bin = width > 0.0
                    ? static_cast<int>(std::floor((value - lo) / width *
                                                  static_cast<double>(n_bins)))
                    : 0;
      if (bin >= n_bins) bin = n_bins - 1;
      if (bin < 0) bin = 0;
      hist.counts[static_cast<std::size_t>(bin)] += 1;
    }
    std::sort(values.begin(), values.end());
    hist.q25 = quantile_sorted(values, 0.25);
    hist.q50 = quantile_sorted(values, 0.50);
    hist.q75 = quantile_sorted(values, 0.75);
    hist.q90 = quantile_sorted(values, 0.90);
    result.push_back(std::move(hist));
  }
  return result;
}

void EmpiricalMeasure::validate() const {
  if (points.rows() != masses.size())
    fail(ErrorCode::DimensionMismatch, "points/masses length mismatch");
  if (masses.empty()) fail(ErrorCode::InvalidArgument, "empty measure");
  double total = 0.0;
  for (double mass : masses) {
    if (mass < 0.0) fail(ErrorCode::InvalidArgument, "negative mass");
    total += mass;
  }
  if (std::fabs(total - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "masses sum to " + std::to_string(total));
}

EmpiricalMeasure treated_measure(const Dataset& ds, std::span<const int> subset) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "treated measure over empty subset");
  EmpiricalMeasure measure;
  measure.points = Matrix(subset.size(), ds.p());
  measure.masses.assign(subset.size(), 1.0 / static_cast<double>(subset.size()));
  for (std::size_t i = 0; i < subset.size(); ++i) {
    const auto row = ds.x.row(static_cast<std::size_t>(subset[i]));
    for (std::size_t k = 0; k < ds.p(); ++k) measure.points(i, k) = row[k];
  }
  return measure;
}

EmpiricalMeasure control_measure(const Dataset& ds, const WeightSet& ws,
                                 std::span<const int> subset) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "control measure over empty subset");
  const double inv_n = 1.0 / static_cast<double>(subset.size());
  std::vector<std::pair<int, double>> aggregated = aggregate_control_weights(ws, subset);
  EmpiricalMeasure measure;
  measure.points = Matrix(aggregated.size(), ds.p());
  measure.masses.resize(aggregated.size());
  for (std::size_t i = 0; i < aggregated.size(); ++i) {
    const auto row = ds.x.row(static_cast<std::size_t>(aggregated[i].first));
    for (std::size_t k = 0; k < ds.p(); ++k) measure.points(i, k) = row[k];
    measure.masses[i] = aggregated[i].second * inv_n;
  }
  return measure;
}

double wasserstein_exact(const EmpiricalMeasure& ft, const EmpiricalMeasure& fc,
                         const ScalingMatrix& v, Norm norm, double q) {
  ft.validate();
  fc.validate();
  if (ft.points.cols() != fc.points.cols() || ft.points.cols() != v.p())
    fail(ErrorCode::DimensionMismatch, "measures/scaling dimensions disagree");
  if (!(q >= 1.0)) fail(ErrorCode::InvalidArgument, "q must be >= 1");
  const std::size_t n = ft.points.rows();
  const std::size_t m = fc.points.rows();
  if (n > kWassersteinMaxPoints || m > kWassersteinMaxPoints)
    fail(ErrorCode::SizeLimitExceeded,
         "transport oracle capped at " + std::to_string(kWassersteinMaxPoints) +
             " points per side");

  // Optimal-transport LP over the n*m coupling: row and column marginals
  // fixed, gamma >= 0. One constraint is redundant; the simplex parks it.
  lp::Problem problem;
  problem.a = Matrix(n + m, n * m);
  problem.b.resize(n + m);
  problem.c.resize(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = scaled_distance(ft.points.row(i), fc.points.row(j), v, norm);
      problem.c[i * m + j] = q == 1.0 ? d : std::pow(d, q);
      problem.a(i, i * m + j) = 1.0;
      problem.a(n + j, i * m + j) = 1.0;
    }
    problem.b[i] = ft.masses[i];
  }
  for (std::size_t j = 0; j < m; ++j) problem.b[n + j] = fc.masses[j];

  const auto sol = lp::solve(problem);
  if (sol.status != lp::Status::Optimal)
    fail(ErrorCode::SolverFailure, "transport LP did not reach an optimum");
  const double cost = std::max(sol.objective, 0.0);
  return q == 1.0 ? cost : std::pow(cost, 1.0 / q);
}

double coupling_cost(const Dataset& ds, const WeightSet& ws, std::span<const int> subset,
                     const ScalingMatrix& v, Norm norm, double q) {
  if (subset.empty()) fail(ErrorCode::EmptySubset, "coupling over empty subset");
  const double inv_n = 1.0 / static_cast<double>(subset.size());
  double total = 0.0;
  for (int row : subset) {
    const UnitWeights* unit = ws.find(row);
    if (unit == nullptr)
      fail(ErrorCode::InvalidArgument, "treated unit without weights in coupling");
    const auto x_t = ds.x.row(static_cast<std::size_t>(row));
    for (const auto& [control_row, w] : unit->weights) {
      const double d =
          scaled_distance(x_t, ds.x.row(static_cast<std::size_t>(control_row)), v, norm);
      total += inv_n * w * (q == 1.0 ? d : std::pow(d, q));
    }
  }
  return q == 1.0 ? total : std::pow(total, 1.0 / q);
}

}  // namespace csm
