#include "csm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "csm/distance.hpp"
#include "csm/rng.hpp"

namespace csm {

const char* to_string(OverlapLevel level) {
  switch (level) {
    case OverlapLevel::VeryLow: return "very_low";
    case OverlapLevel::Low: return "low";
    case OverlapLevel::Medium: return "medium";
    case OverlapLevel::High: return "high";
    case OverlapLevel::VeryHigh: return "very_high";
  }
  return "?";
}

const std::vector<OverlapLevel>& all_overlap_levels() {
  static const std::vector<OverlapLevel> levels = {
      OverlapLevel::VeryLow, OverlapLevel::Low, OverlapLevel::Medium,
      OverlapLevel::High, OverlapLevel::VeryHigh};
  return levels;
}

double uniform_control_fraction(OverlapLevel level) {
  switch (level) {
    case OverlapLevel::VeryLow: return 100.0 / 550.0;
    case OverlapLevel::Low: return 0.375;
    case OverlapLevel::Medium: return 0.55;
    case OverlapLevel::High: return 0.725;
    case OverlapLevel::VeryHigh: return 0.9;
  }
  return 0.0;
}

double toy_f0(double x1, double x2) {
  // Gaussian ridge centered at (0.5, 0.5) with shape matrix [[1, .8], [.8, 1]]
  // (unit peak). The ridge runs along the x1 = x2 diagonal, so the covariate
  // interaction drives the confounding.
  constexpr double det = 1.0 - 0.8 * 0.8;
  const double dx = x1 - 0.5;
  const double dy = x2 - 0.5;
  const double quad = (dx * dx - 2.0 * 0.8 * dx * dy + dy * dy) / det;
  return std::exp(-0.5 * quad);
}

double toy_tau(double x1, double x2) { return 3.0 * x1 + 3.0 * x2; }

ToySample gen_toy(const ToyDgpConfig& cfg) {
  if (cfg.n_treated_per_center < 1)
    fail(ErrorCode::InvalidArgument, "need at least one treated unit per center");
  const int total_controls = cfg.total_controls();
  if (total_controls < 1) fail(ErrorCode::InvalidArgument, "need at least one control");

  // Overlap level fixes the uniform share of the control pool; the leftover
  // splits evenly across the two clustered centers (first center takes the
  // remainder when odd).
  const double frac = uniform_control_fraction(cfg.overlap_level);
  const int n_uniform =
      static_cast<int>(std::llround(frac * static_cast<double>(total_controls)));
  const int n_clustered = total_controls - n_uniform;
  const int per_center_b = n_clustered / 2;
  const int per_center_a = n_clustered - per_center_b;

  Rng rng(cfg.seed);

  ToySample sample;
  const int n_treated = 2 * cfg.n_treated_per_center;
  const int n_units = n_treated + total_controls;
  auto& ds = sample.ds;
  ds.column_names = {"x1", "x2"};
  ds.x = Matrix(static_cast<std::size_t>(n_units), 2);
  ds.z.assign(static_cast<std::size_t>(n_units), 0);
  ds.y.assign(static_cast<std::size_t>(n_units), 0.0);
  ds.ids.reserve(static_cast<std::size_t>(n_units));

  // Draw order is part of the reproducibility contract: treated cluster A,
  // treated cluster B, control cluster A, control cluster B, uniform
  // controls; then one outcome noise draw per unit in row order.
  int row = 0;
  auto emit_cluster = [&](int count, double cx, double cy, bool treated,
                          const char* prefix) {
    for (int i = 0; i < count; ++i, ++row) {
      ds.x(static_cast<std::size_t>(row), 0) = cx + cfg.cluster_sd * rng.normal();
      ds.x(static_cast<std::size_t>(row), 1) = cy + cfg.cluster_sd * rng.normal();
      ds.z[static_cast<std::size_t>(row)] = treated ? 1 : 0;
      ds.ids.push_back(prefix + std::to_string(row + 1));
    }
  };
  emit_cluster(cfg.n_treated_per_center, 0.25, 0.25, true, "T");
  emit_cluster(cfg.n_treated_per_center, 0.75, 0.75, true, "T");
  emit_cluster(per_center_a, 0.25, 0.75, false, "C");
  emit_cluster(per_center_b, 0.75, 0.25, false, "C");
  for (int i = 0; i < n_uniform; ++i, ++row) {
    ds.x(static_cast<std::size_t>(row), 0) = rng.uniform01();
    ds.x(static_cast<std::size_t>(row), 1) = rng.uniform01();
    ds.z[static_cast<std::size_t>(row)] = 0;
    ds.ids.push_back("C" + std::to_string(row + 1));
  }

  sample.f0_values.resize(static_cast<std::size_t>(n_units));
  sample.tau_values.resize(static_cast<std::size_t>(n_units));
  double tau_total = 0.0;
  for (int i = 0; i < n_units; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double x1 = ds.x(idx, 0);
    const double x2 = ds.x(idx, 1);
    sample.f0_values[idx] = toy_f0(x1, x2);
    sample.tau_values[idx] = toy_tau(x1, x2);
    const double eps = cfg.noise_sd * rng.normal();
    ds.y[idx] = sample.f0_values[idx] +
                (ds.z[idx] == 1 ? sample.tau_values[idx] : 0.0) + eps;
    if (ds.z[idx] == 1) tau_total += sample.tau_values[idx];
  }
  sample.true_satt = tau_total / static_cast<double>(n_treated);
  ds.validate();
  return sample;
}

SyntheticSurface cone_surface(std::vector<double> anchor, const ScalingMatrix& v,
                              Norm norm, double lambda) {
  SyntheticSurface surface;
  surface.lipschitz_constant = lambda;
  surface.norm = norm;
  surface.description = "lambda * d_V(x, anchor)";
  surface.f0 = [anchor = std::move(anchor), v, norm, lambda](std::span<const double> x) {
    return lambda * scaled_distance(x, anchor, v, norm);
  };
  return surface;
}

SyntheticSurface linear_surface(std::vector<double> coeffs, const ScalingMatrix& v,
                                Norm norm) {
  SyntheticSurface surface;
  surface.norm = norm;
  surface.description = "g . x";
  // |g.(x-y)| <= sum_k |g_k| pi_k * ||V(x-y)||_inf (Hoelder), and
  //           <= sqrt(sum_k (g_k pi_k)^2) * ||V(x-y)||_2.
  double linf_const = 0.0, l2_const = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double scaled = std::fabs(coeffs[k]) / v.v_diag[k];
    linf_const += scaled;
    l2_const += scaled * scaled;
  }
  surface.lipschitz_constant = norm == Norm::Linf ? linf_const : std::sqrt(l2_const);
  surface.f0 = [coeffs = std::move(coeffs)](std::span<const double> x) {
    double total = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) total += coeffs[k] * x[k];
    return total;
  };
  return surface;
}

double true_se(std::span<const double> tau_hats, std::span<const double> biases,
               std::span<const double> true_satts) {
  if (tau_hats.size() != biases.size() || tau_hats.size() != true_satts.size())
    fail(ErrorCode::LengthMismatch, "true_se inputs differ in length");
  if (tau_hats.size() < 2)
    fail(ErrorCode::LengthMismatch, "true_se needs at least 2 trials");
  const std::size_t n = tau_hats.size();
  std::vector<double> centered(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    centered[i] = tau_hats[i] - biases[i] - true_satts[i];
    mean += centered[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double value : centered) ss += (value - mean) * (value - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

EstimatorSettings method_comparison_settings() {
  EstimatorSettings settings;
  settings.policy = CaliperPolicy::Adaptive;
  settings.scm_norm = Norm::L2;
  return settings;
}

namespace {

CaliperSpec settings_to_spec(const Dataset& ds, const EstimatorSettings& settings) {
  CaliperSpec spec = default_caliper(ds, settings.caliper_bins);
  spec.norm = settings.norm;
  spec.policy = settings.policy;
  spec.c = settings.c;
  spec.alpha = settings.alpha;
  spec.k_min = settings.k_min;
  spec.k_max = settings.k_max;
  spec.validate();
  return spec;
}

// Bias term of the error decomposition, computable in simulation where f0 is
// known: (1/|subset|) sum_t sum_j w_jt (f0(X_t) - f0(X_j)).
double known_f0_bias(const ToySample& sample, const WeightSet& ws,
                     std::span<const int> subset) {
  double total = 0.0;
  for (int row : subset) {
    const UnitWeights* unit = ws.find(row);
    if (unit == nullptr) continue;
    const double f0_t = sample.f0_values[static_cast<std::size_t>(row)];
    for (const auto& [control_row, w] : unit->weights)
      total += w * (f0_t - sample.f0_values[static_cast<std::size_t>(control_row)]);
  }
  return total / static_cast<double>(subset.size());
}

struct TrialOutcome {
  double tau_hat = 0.0;
  double bias = 0.0;  // known-f0 bias component
  double true_satt = 0.0;
  double se_hat = 0.0;
  double ess_control = 0.0;
  bool has_se = false;
  bool covered = false;
};

TrialOutcome run_csm_trial(const ToySample& sample, const EstimatorSettings& settings) {
  const auto& ds = sample.ds;
  const CaliperSpec spec = settings_to_spec(ds, settings);
  const auto dm = distance_matrix(ds, spec);
  const auto mr = radius_match(ds, dm, spec);
  const auto ws = assign_weights(mr, ds, spec, settings.scheme, settings.scm_tol,
                                 1, settings.scm_norm);
  const auto subset = mr.matched_treated_rows();
  const auto est = estimate(ds, mr, ws, subset, settings.level);

  TrialOutcome outcome;
  outcome.tau_hat = est.tau_hat;
  outcome.bias = known_f0_bias(sample, ws, subset);
  outcome.true_satt = sample.true_satt;
  outcome.se_hat = est.se_hat;
  outcome.ess_control = est.ess_control;
  outcome.has_se = est.has_se;
  outcome.covered =
      est.has_se && est.ci_lo <= sample.true_satt && sample.true_satt <= est.ci_hi;
  return outcome;
}

double mean_of(const std::vector<double>& values) {
  double total = 0.0;
  for (double value : values) total += value;
  return total / static_cast<double>(values.size());
}

double sd_of(const std::vector<double>& values) {
  const double mean = mean_of(values);
  double ss = 0.0;
  for (double value : values) ss += (value - mean) * (value - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

void parallel_trials(int n_trials, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || n_trials < 2) {
    for (int trial = 0; trial < n_trials; ++trial) body(trial);
    return;
  }
  const int n_workers = std::min(threads, n_trials);
  std::vector<std::thread> workers;
  const int chunk = (n_trials + n_workers - 1) / n_workers;
  for (int w = 0; w < n_workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(begin + chunk, n_trials);
    if (begin >= end) break;
    workers.emplace_back([&body, begin, end] {
      for (int trial = begin; trial < end; ++trial) body(trial);
    });
  }
  for (auto& worker : workers) worker.join();
}

}  // namespace

MonteCarloReport run_coverage_study(std::uint64_t master_seed, int n_trials,
                                    ToyDgpConfig base_cfg, EstimatorSettings settings,
                                    int threads) {
  if (n_trials < 2) fail(ErrorCode::InvalidArgument, "need at least 2 trials");

  MonteCarloReport report;
  report.master_seed = master_seed;
  report.n_trials = n_trials;
  const Rng master(master_seed);

  const auto& levels = all_overlap_levels();
  for (std::size_t level_idx = 0; level_idx < levels.size(); ++level_idx) {
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_trials));
    parallel_trials(n_trials, threads, [&](int trial) {
      ToyDgpConfig cfg = base_cfg;
      cfg.overlap_level = levels[level_idx];
      // Stream id packs (level, trial) so every trial draws independently.
      cfg.seed = master.derive(level_idx * 0x100000000ULL +
                               static_cast<std::uint64_t>(trial))
                     .next_u64();
      const auto sample = gen_toy(cfg);
      outcomes[static_cast<std::size_t>(trial)] = run_csm_trial(sample, settings);
    });

    std::vector<double> tau_hats, biases, true_satts, se_hats, ess_values, errors;
    int n_covered = 0;
    for (const auto& outcome : outcomes) {
      if (!outcome.has_se)
        fail(ErrorCode::NoMultiUnitClusters,
             "coverage trial produced no multi-control cluster");
      tau_hats.push_back(outcome.tau_hat);
      biases.push_back(outcome.bias);
      true_satts.push_back(outcome.true_satt);
      se_hats.push_back(outcome.se_hat);
      ess_values.push_back(outcome.ess_control);
      errors.push_back(outcome.tau_hat - outcome.true_satt);
      n_covered += outcome.covered ? 1 : 0;
    }

    CoverageRow row;
    row.level = levels[level_idx];
    row.n_trials = n_trials;
    row.ess_control_avg = mean_of(ess_values);
    row.se_hat_avg = mean_of(se_hats);
    row.se_true = true_se(tau_hats, biases, true_satts);
    row.bias = mean_of(errors);
    double mse = 0.0;
    for (double err : errors) mse += err * err;
    mse /= static_cast<double>(n_trials);
    row.rmse = std::sqrt(mse);
    row.coverage = static_cast<double>(n_covered) / static_cast<double>(n_trials);

    const double sqrt_n = std::sqrt(static_cast<double>(n_trials));
    row.mc_se_bias = sd_of(errors) / sqrt_n;
    // Delta method for sqrt(mean of squared errors).
    std::vector<double> squared(errors.size());
    for (std::size_t i = 0; i < errors.size(); ++i) squared[i] = errors[i] * errors[i];
    row.mc_se_rmse = row.rmse > 0.0 ? sd_of(squared) / (2.0 * row.rmse * sqrt_n) : 0.0;
    row.mc_se_coverage =
        std::sqrt(row.coverage * (1.0 - row.coverage) / static_cast<double>(n_trials));
    row.mc_se_se_true = row.se_true / std::sqrt(2.0 * static_cast<double>(n_trials - 1));
    report.rows.push_back(row);
  }
  return report;
}

double paired_rmse_margin_se(std::span<const double> errors_a,
                             std::span<const double> errors_b) {
  if (errors_a.size() != errors_b.size() || errors_a.size() < 2)
    fail(ErrorCode::LengthMismatch, "paired margin needs equal-length error vectors");
  const std::size_t n = errors_a.size();
  std::vector<double> diff_sq(n);
  double mse_a = 0.0, mse_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diff_sq[i] = errors_b[i] * errors_b[i] - errors_a[i] * errors_a[i];
    mse_a += errors_a[i] * errors_a[i];
    mse_b += errors_b[i] * errors_b[i];
  }
  mse_a /= static_cast<double>(n);
  mse_b /= static_cast<double>(n);
  const double denom = std::sqrt(mse_a) + std::sqrt(mse_b);
  const double se_mse_diff = sd_of(diff_sq) / std::sqrt(static_cast<double>(n));
  return denom > 0.0 ? se_mse_diff / denom : 0.0;
}

const char* to_string(ComparisonMethod method) {
  switch (method) {
    case ComparisonMethod::Csm: return "csm";
    case ComparisonMethod::UniformRadius: return "uniform_radius";
    case ComparisonMethod::OneNn: return "one_nn";
    case ComparisonMethod::Cem: return "cem";
    case ComparisonMethod::DiffMeans: return "diff_means";
  }
  return "?";
}

ComparisonReport run_method_comparison(std::uint64_t master_seed, int n_trials,
                                       ToyDgpConfig cfg, EstimatorSettings settings,
                                       int threads) {
  if (n_trials < 2) fail(ErrorCode::InvalidArgument, "need at least 2 trials");

  const std::vector<ComparisonMethod> methods = {
      ComparisonMethod::Csm, ComparisonMethod::UniformRadius, ComparisonMethod::OneNn,
      ComparisonMethod::Cem, ComparisonMethod::DiffMeans};

  ComparisonReport report;
  report.master_seed = master_seed;
  report.n_trials = n_trials;
  const Rng master(master_seed);

  // errors[method][trial] = tau_hat - true_satt
  std::vector<std::vector<double>> errors(
      methods.size(), std::vector<double>(static_cast<std::size_t>(n_trials)));

  parallel_trials(n_trials, threads, [&](int trial) {
    ToyDgpConfig trial_cfg = cfg;
    // Distinct stream space from the coverage study's (level, trial) packing.
    trial_cfg.seed =
        master.derive(0xC0DE000000000000ULL + static_cast<std::uint64_t>(trial))
            .next_u64();
    const auto sample = gen_toy(trial_cfg);
    const auto& ds = sample.ds;
    const auto t = static_cast<std::size_t>(trial);

    const CaliperSpec spec = settings_to_spec(ds, settings);
    const auto dm = distance_matrix(ds, spec);
    const auto mr = radius_match(ds, dm, spec);

    {  // CSM: radius match + synthetic-control weights
      const auto ws = assign_weights(mr, ds, spec, WeightScheme::Scm, settings.scm_tol,
                                     1, settings.scm_norm);
      const auto subset = mr.matched_treated_rows();
      errors[0][t] = att_point_estimate(ds, ws, subset) - sample.true_satt;
    }
    {  // same matched sets, simple-average weights
      const auto ws = assign_weights(mr, ds, spec, WeightScheme::Uniform);
      const auto subset = mr.matched_treated_rows();
      errors[1][t] = att_point_estimate(ds, ws, subset) - sample.true_satt;
    }
    {  // 1-NN with ties shared
      const auto nn = one_nn_match(ds, dm);
      const auto ws = assign_weights(nn, ds, spec, WeightScheme::OneNn);
      const auto subset = nn.matched_treated_rows();
      errors[2][t] = att_point_estimate(ds, ws, subset) - sample.true_satt;
    }
    {  // CEM with the same five-bin coarsening; unmatched strata drop out
      const auto cem = cem_match(ds, settings.caliper_bins);
      const auto ws = assign_weights(cem, ds, cem.spec_used, WeightScheme::Uniform);
      const auto subset = cem.matched_treated_rows();
      if (subset.empty()) {
        errors[3][t] = std::numeric_limits<double>::quiet_NaN();
      } else {
        errors[3][t] = att_point_estimate(ds, ws, subset) - sample.true_satt;
      }
    }
    {  // raw difference in means
      double treated_mean = 0.0, control_mean = 0.0;
      for (std::size_t i = 0; i < ds.n(); ++i) {
        if (ds.z[i] == 1) treated_mean += ds.y[i];
        else control_mean += ds.y[i];
      }
      treated_mean /= static_cast<double>(ds.n_treated());
      control_mean /= static_cast<double>(ds.n_controls());
      errors[4][t] = treated_mean - control_mean - sample.true_satt;
    }
  });

  report.per_trial_errors = errors;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::vector<double> errs;
    for (double err : errors[mi])
      if (std::isfinite(err)) errs.push_back(err);
    ComparisonRow row;
    row.method = methods[mi];
    row.n_trials = static_cast<int>(errs.size());
    const double bias = mean_of(errs);
    row.abs_bias = std::fabs(bias);
    double mse = 0.0;
    for (double err : errs) mse += err * err;
    mse /= static_cast<double>(errs.size());
    row.rmse = std::sqrt(mse);
    const double sqrt_n = std::sqrt(static_cast<double>(errs.size()));
    row.mc_se_bias = sd_of(errs) / sqrt_n;
    std::vector<double> squared(errs.size());
    for (std::size_t i = 0; i < errs.size(); ++i) squared[i] = errs[i] * errs[i];
    row.mc_se_rmse = row.rmse > 0.0 ? sd_of(squared) / (2.0 * row.rmse * sqrt_n) : 0.0;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace csm
