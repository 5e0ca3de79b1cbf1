#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/estimator.hpp"
#include "csm/scm.hpp"

namespace csm {

enum class OverlapLevel { VeryLow, Low, Medium, High, VeryHigh };

const char* to_string(OverlapLevel level);
const std::vector<OverlapLevel>& all_overlap_levels();

// Fraction of the control pool drawn uniformly on the unit square at each
// overlap level. The lowest level matches the base composition (100 of 550);
// the grid is monotone up to 0.9.
double uniform_control_fraction(OverlapLevel level);

// Two treated clusters at (0.25,0.25) and (0.75,0.75), two control clusters
// at (0.25,0.75) and (0.75,0.25) (all sd 0.1), plus uniform controls.
// Outcomes: Y = f0(x) + Z * (3 x1 + 3 x2) + eps, eps ~ N(0, noise_sd^2),
// where f0 is a unit-peak Gaussian ridge at (0.5,0.5) with shape matrix
// [[1, 0.8], [0.8, 1]]: treated clusters sit on the ridge, control clusters
// off it, so marginal methods face real confounding.
struct ToyDgpConfig {
  int n_treated_per_center = 50;
  int n_control_per_center = 225;
  int n_uniform_controls = 100;
  double cluster_sd = 0.1;
  double noise_sd = 0.5;
  // Rescales (n_control_per_center, n_uniform_controls) keeping the total
  // control count fixed. The default level reproduces the base 450/100 split.
  OverlapLevel overlap_level = OverlapLevel::VeryLow;
  std::uint64_t seed = 0;

  int total_controls() const { return 2 * n_control_per_center + n_uniform_controls; }
};

double toy_f0(double x1, double x2);
double toy_tau(double x1, double x2);

struct ToySample {
  Dataset ds;
  double true_satt = 0.0;         // mean of tau over realized treated units
  std::vector<double> f0_values;  // f0 at each row's covariates
  std::vector<double> tau_values; // tau at each row's covariates
};

ToySample gen_toy(const ToyDgpConfig& cfg);

// An outcome surface with a certified Lipschitz constant with respect to a
// stated (V, norm); used by the bias-bound property tests.
struct SyntheticSurface {
  std::function<double(std::span<const double>)> f0;
  double lipschitz_constant = 0.0;
  Norm norm = Norm::Linf;
  std::string description;
};

// f0(x) = lambda * d_V(x, anchor): Lipschitz(lambda) exactly, by the triangle
// inequality.
SyntheticSurface cone_surface(std::vector<double> anchor, const ScalingMatrix& v,
                              Norm norm, double lambda);

// f0(x) = g . x with the induced constant: sum_k |g_k| pi_k for Linf,
// sqrt(sum_k (g_k pi_k)^2) for L2.
SyntheticSurface linear_surface(std::vector<double> coeffs, const ScalingMatrix& v,
                                Norm norm);

// Sample standard deviation of tau_hat - bias - tau across trials (the
// noise-only error component; bias is computed per trial from the known f0).
double true_se(std::span<const double> tau_hats, std::span<const double> biases,
               std::span<const double> true_satts);

// Matching/estimation settings shared by the Monte Carlo studies. Defaults:
// auto caliper with five bins, Linf calipers, k-bounded caliper in [1, 5],
// SCM weights, SATT over all treated units.
struct EstimatorSettings {
  int caliper_bins = 5;
  Norm norm = Norm::Linf;  // distance matrix / caliper geometry
  CaliperPolicy policy = CaliperPolicy::KBounded;
  double c = 1.0;
  double alpha = 1.0;
  int k_min = 1;
  int k_max = 5;
  WeightScheme scheme = WeightScheme::Scm;
  Norm scm_norm = Norm::Linf;  // SCM projection norm (LP vs QP)
  double level = 0.95;
  double scm_tol = 1e-8;
};

// The default method's configuration for the head-to-head comparison:
// adaptive Linf calipers (floor c = 1, alpha = 1) with the standard
// quadratic-programming synthetic control step.
EstimatorSettings method_comparison_settings();

struct CoverageRow {
  OverlapLevel level = OverlapLevel::VeryLow;
  int n_trials = 0;
  double ess_control_avg = 0.0;
  double se_hat_avg = 0.0;
  double se_true = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  // Monte Carlo standard errors of the estimates above.
  double mc_se_bias = 0.0;
  double mc_se_rmse = 0.0;
  double mc_se_coverage = 0.0;
  double mc_se_se_true = 0.0;
};

struct MonteCarloReport {
  std::vector<CoverageRow> rows;
  std::uint64_t master_seed = 0;
  int n_trials = 0;
};

// Reproduces the overlap/coverage study: per level, n_trials independent toy
// draws through distance -> radius match -> weights -> estimate, aggregated
// into the report. Trials are seeded from (master_seed, level, trial) so the
// report is deterministic and schedule-independent.
MonteCarloReport run_coverage_study(std::uint64_t master_seed, int n_trials = 500,
                                    ToyDgpConfig base_cfg = {},
                                    EstimatorSettings settings = {},
                                    int threads = 1);

enum class ComparisonMethod { Csm, UniformRadius, OneNn, Cem, DiffMeans };

const char* to_string(ComparisonMethod method);

struct ComparisonRow {
  ComparisonMethod method = ComparisonMethod::Csm;
  int n_trials = 0;
  double rmse = 0.0;
  double abs_bias = 0.0;
  double mc_se_rmse = 0.0;
  double mc_se_bias = 0.0;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  // Per-trial errors tau_hat - true_satt, aligned with rows; NaN where a
  // method produced no estimate (CEM with every stratum empty).
  std::vector<std::vector<double>> per_trial_errors;
  std::uint64_t master_seed = 0;
  int n_trials = 0;
};

// Monte Carlo SE of rmse(b) - rmse(a) when both methods ran on the same
// trials (delta method on the paired squared errors).
double paired_rmse_margin_se(std::span<const double> errors_a,
                             std::span<const double> errors_b);

// Point-estimate RMSE and absolute bias per method on the toy DGP; all
// methods see the same simulated datasets.
ComparisonReport run_method_comparison(std::uint64_t master_seed, int n_trials = 250,
                                       ToyDgpConfig cfg = {},
                                       EstimatorSettings settings = method_comparison_settings(),
                                       int threads = 1);

}  // namespace csm
