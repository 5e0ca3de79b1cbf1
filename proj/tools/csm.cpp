// csm: caliper synthetic matching pipeline over CSV datasets, plus the
// simulation harness. One subcommand per stage so a full analysis is a short
// shell pipeline: diagnose distances -> match -> estimate -> diagnose love.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csm/dataset.hpp"
#include "csm/diagnostics.hpp"
#include "csm/distance.hpp"
#include "csm/estimator.hpp"
#include "csm/io_util.hpp"
#include "csm/kernels.hpp"
#include "csm/matcher.hpp"
#include "csm/scm.hpp"
#include "csm/simulate.hpp"
#include "csm/version.hpp"

namespace {

using csm::format_double;
using nlohmann::json;

struct RunConfig {
  std::string input;
  std::string treatment;
  std::string outcome;
  std::string covariates;  // comma-separated; empty = all remaining
  std::string id_column;
  std::string caliper_config;
  int auto_caliper_bins = 5;
  std::string norm;  // empty: keep the config file's norm (default linf)
  std::string policy;
  double alpha = -1.0;
  double c = -1.0;
  int k_min = -1;
  int k_max = -1;
  std::string scheme = "scm";
  std::string subset = "feasible";
  double level = 0.95;
  std::string out_dir = ".";
  bool json_mirror = false;
  std::uint64_t seed = 12345;
  int trials = -1;
  int threads = 1;
  int k_hist = 3;
  int hist_bins = 30;

  std::string canonical(const std::string& subcommand) const {
    std::ostringstream ss;
    ss << "cmd=" << subcommand << ";input=" << input << ";treatment=" << treatment
       << ";outcome=" << outcome << ";covariates=" << covariates << ";id=" << id_column
       << ";caliper_config=" << caliper_config << ";auto=" << auto_caliper_bins
       << ";norm=" << norm << ";policy=" << policy << ";alpha=" << format_double(alpha)
       << ";c=" << format_double(c) << ";kmin=" << k_min << ";kmax=" << k_max
       << ";scheme=" << scheme << ";subset=" << subset
       << ";level=" << format_double(level) << ";seed=" << seed << ";trials=" << trials
       << ";k=" << k_hist << ";bins=" << hist_bins;
    return ss.str();
  }
};

std::string header_line(const RunConfig& cfg, const std::string& subcommand) {
  return std::string("# csm ") + csm::kVersion +
         " config=" + csm::hash_hex(cfg.canonical(subcommand)) + "\n";
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

csm::Dataset load_input(const RunConfig& cfg) {
  csm::SchemaMapping schema;
  schema.treatment = cfg.treatment;
  schema.outcome = cfg.outcome;
  schema.covariates = split_commas(cfg.covariates);
  schema.id = cfg.id_column;
  return csm::load_dataset(cfg.input, schema);
}

csm::CaliperSpec resolve_spec(const RunConfig& cfg, const csm::Dataset& ds) {
  csm::CaliperSpec spec;
  if (!cfg.caliper_config.empty()) {
    spec = csm::load_caliper_config(cfg.caliper_config, ds.column_names);
  } else {
    spec = csm::default_caliper(ds, cfg.auto_caliper_bins);
  }
  if (!cfg.policy.empty()) {
    if (cfg.policy == "fixed") spec.policy = csm::CaliperPolicy::Fixed;
    else if (cfg.policy == "adaptive") spec.policy = csm::CaliperPolicy::Adaptive;
    else if (cfg.policy == "kbounded") spec.policy = csm::CaliperPolicy::KBounded;
    else csm::fail(csm::ErrorCode::InvalidArgument, "unknown --policy " + cfg.policy);
  }
  if (!cfg.norm.empty()) {
    if (cfg.norm == "l2") spec.norm = csm::Norm::L2;
    else if (cfg.norm == "linf") spec.norm = csm::Norm::Linf;
    else csm::fail(csm::ErrorCode::InvalidArgument, "unknown --norm " + cfg.norm);
  }
  if (cfg.c > 0.0) spec.c = cfg.c;
  if (cfg.alpha > 0.0) spec.alpha = cfg.alpha;
  if (cfg.k_min > 0) spec.k_min = cfg.k_min;
  if (cfg.k_max > 0) spec.k_max = cfg.k_max;
  if (spec.policy == csm::CaliperPolicy::KBounded && cfg.k_max <= 0 && spec.k_max < spec.k_min)
    spec.k_max = spec.k_min;
  spec.validate();
  return spec;
}

csm::WeightScheme resolve_scheme(const RunConfig& cfg) {
  if (cfg.scheme == "scm") return csm::WeightScheme::Scm;
  if (cfg.scheme == "uniform") return csm::WeightScheme::Uniform;
  if (cfg.scheme == "1nn") return csm::WeightScheme::OneNn;
  csm::fail(csm::ErrorCode::InvalidArgument, "unknown --scheme " + cfg.scheme);
}

// feasible | all | maxc=<x>; always intersected with units that have matches.
std::vector<int> resolve_subset(const RunConfig& cfg, const csm::MatchResult& mr,
                                const csm::Dataset& ds, std::ostream& log) {
  std::vector<int> rows;
  if (cfg.subset == "feasible") {
    rows = mr.feasible_treated_rows();
  } else if (cfg.subset == "all") {
    rows = mr.all_treated_rows();
  } else if (cfg.subset.rfind("maxc=", 0) == 0) {
    double cap = 0.0;
    try {
      cap = std::stod(cfg.subset.substr(5));
    } catch (const std::exception&) {
      csm::fail(csm::ErrorCode::InvalidArgument,
                "--subset maxc= needs a number, got " + cfg.subset);
    }
    for (const auto& unit : mr.units)
      if (unit.c_t <= cap) rows.push_back(unit.treated_row);
  } else {
    csm::fail(csm::ErrorCode::InvalidArgument, "unknown --subset " + cfg.subset);
  }
  std::vector<int> usable;
  std::vector<std::string> dropped;
  for (int row : rows) {
    const auto* unit = [&]() -> const csm::TreatedMatch* {
      for (const auto& u : mr.units)
        if (u.treated_row == row) return &u;
      return nullptr;
    }();
    if (unit != nullptr && !unit->matched.empty()) usable.push_back(row);
    else dropped.push_back(ds.ids[static_cast<std::size_t>(row)]);
  }
  if (!dropped.empty()) {
    log << "warning: " << dropped.size()
        << " treated unit(s) without matches excluded from the subset:";
    for (const auto& id : dropped) log << ' ' << id;
    log << '\n';
  }
  return usable;
}

void write_with_mirror(const RunConfig& cfg, const std::string& name,
                       const std::string& csv, const json& mirror) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  csm::write_text_file((fs::path(cfg.out_dir) / (name + ".csv")).string(), csv);
  if (cfg.json_mirror) {
    csm::write_text_file((fs::path(cfg.out_dir) / (name + ".json")).string(),
                         mirror.dump(2) + "\n");
  }
}

struct Pipeline {
  csm::Dataset ds;
  csm::CaliperSpec spec;
  csm::DistanceMatrix dm;
  csm::MatchResult mr;
};

Pipeline run_matching(const RunConfig& cfg) {
  Pipeline p;
  p.ds = load_input(cfg);
  p.spec = resolve_spec(cfg, p.ds);
  p.dm = csm::distance_matrix(p.ds, p.spec, cfg.threads);
  p.mr = csm::radius_match(p.ds, p.dm, p.spec);
  return p;
}

std::string match_csv(const RunConfig& cfg, const Pipeline& p) {
  std::ostringstream out;
  out << header_line(cfg, "match");
  out << "treated_id,control_id,distance,c_t,feasible,method\n";
  for (const auto& unit : p.mr.units) {
    const auto& tid = p.ds.ids[static_cast<std::size_t>(unit.treated_row)];
    if (unit.matched.empty()) {
      out << csm::csv_escape(tid) << ",,," << format_double(unit.c_t) << ','
          << (unit.feasible ? 1 : 0) << ',' << to_string(p.mr.method) << '\n';
      continue;
    }
    for (const auto& mc : unit.matched) {
      out << csm::csv_escape(tid) << ','
          << csm::csv_escape(p.ds.ids[static_cast<std::size_t>(mc.control_row)]) << ','
          << format_double(mc.distance) << ',' << format_double(unit.c_t) << ','
          << (unit.feasible ? 1 : 0) << ',' << to_string(p.mr.method) << '\n';
    }
  }
  return out.str();
}

int cmd_match(const RunConfig& cfg) {
  Pipeline p = run_matching(cfg);
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  csm::write_text_file((fs::path(cfg.out_dir) / "match.csv").string(), match_csv(cfg, p));

  std::vector<double> cts;
  for (const auto& unit : p.mr.units) cts.push_back(unit.c_t);
  std::sort(cts.begin(), cts.end());
  std::cout << "treated units: " << p.mr.units.size() << "\n";
  std::cout << "feasible (d_t <= c): " << p.mr.feasible_count() << "\n";
  if (p.mr.feasible_count() < p.mr.units.size()) {
    std::cout << "warning: no control within c=" << format_double(p.spec.c)
              << " for:";
    for (const auto& unit : p.mr.units) {
      if (!unit.feasible)
        std::cout << ' ' << p.ds.ids[static_cast<std::size_t>(unit.treated_row)];
    }
    std::cout << "\n";
  }
  std::cout << "c_t quantiles: 25%=" << format_double(csm::quantile_sorted(cts, 0.25))
            << " 50%=" << format_double(csm::quantile_sorted(cts, 0.50))
            << " 75%=" << format_double(csm::quantile_sorted(cts, 0.75))
            << " 90%=" << format_double(csm::quantile_sorted(cts, 0.90)) << "\n";
  std::cout << "wrote " << (fs::path(cfg.out_dir) / "match.csv").string() << "\n";
  return 0;
}

std::string weights_csv(const RunConfig& cfg, const Pipeline& p, const csm::WeightSet& ws) {
  std::ostringstream out;
  out << header_line(cfg, "weights");
  out << "treated_id,control_id,weight,scheme,imbalance\n";
  for (const auto& unit : ws.units) {
    if (unit.skipped) continue;
    const auto& tid = p.ds.ids[static_cast<std::size_t>(unit.treated_row)];
    for (const auto& [control_row, w] : unit.weights) {
      out << csm::csv_escape(tid) << ','
          << csm::csv_escape(p.ds.ids[static_cast<std::size_t>(control_row)]) << ','
          << format_double(w) << ',' << to_string(ws.scheme) << ','
          << format_double(unit.imbalance) << '\n';
    }
  }
  return out.str();
}

int cmd_estimate(const RunConfig& cfg) {
  Pipeline p = run_matching(cfg);
  const auto scheme = resolve_scheme(cfg);
  const auto ws = csm::assign_weights(p.mr, p.ds, p.spec, scheme, 1e-8, cfg.threads);
  const auto subset = resolve_subset(cfg, p.mr, p.ds, std::cerr);
  const auto est = csm::estimate(p.ds, p.mr, ws, subset, cfg.level);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  csm::write_text_file((fs::path(cfg.out_dir) / "weights.csv").string(),
                       weights_csv(cfg, p, ws));

  // Human-readable summary; the JSON mirror carries full precision.
  std::ostringstream text;
  text << header_line(cfg, "estimate");
  char line[512];
  std::snprintf(line, sizeof(line), "%-12s %-12s %-12s %-12s %-12s %-10s %-9s %s\n",
                "tau_hat", "se", "ci_lo", "ci_hi", "ess_control", "n_treated",
                "estimand", "s2");
  text << line;
  auto compact = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };
  std::snprintf(line, sizeof(line), "%-12s %-12s %-12s %-12s %-12s %-10d %-9s %s\n",
                compact(est.tau_hat).c_str(),
                est.has_se ? compact(est.se_hat).c_str() : "unavailable",
                est.has_se ? compact(est.ci_lo).c_str() : "-",
                est.has_se ? compact(est.ci_hi).c_str() : "-",
                compact(est.ess_control).c_str(), est.n_treated_used,
                to_string(est.estimand),
                est.has_se ? compact(est.s2).c_str() : "-");
  text << line;
  csm::write_text_file((fs::path(cfg.out_dir) / "estimate.txt").string(), text.str());
  std::cout << text.str();

  if (cfg.json_mirror) {
    json j;
    j["tool_version"] = csm::kVersion;
    j["config_hash"] = csm::hash_hex(cfg.canonical("estimate"));
    j["tau_hat"] = est.tau_hat;
    j["estimand"] = to_string(est.estimand);
    j["n_treated_used"] = est.n_treated_used;
    j["ess_control"] = est.ess_control;
    j["level"] = est.level;
    if (est.has_se) {
      j["se"] = est.se_hat;
      j["ci_lo"] = est.ci_lo;
      j["ci_hi"] = est.ci_hi;
      j["s2"] = est.s2;
      j["n_clusters_used"] = est.n_clusters_used;
    } else {
      j["se"] = "unavailable";
    }
    csm::write_text_file((fs::path(cfg.out_dir) / "estimate.json").string(),
                         j.dump(2) + "\n");
  }
  return 0;
}

int cmd_diagnose(const RunConfig& cfg, const std::string& which) {
  Pipeline p = run_matching(cfg);

  if (which == "distances") {
    std::ostringstream out;
    out << header_line(cfg, "diagnose-distances");
    out << "treated_id";
    for (const auto& cid : p.dm.control_ids) out << ',' << csm::csv_escape(cid);
    out << '\n';
    for (std::size_t t = 0; t < p.dm.n_treated(); ++t) {
      out << csm::csv_escape(p.dm.treated_ids[t]);
      for (std::size_t j = 0; j < p.dm.n_controls(); ++j)
        out << ',' << format_double(p.dm.d(t, j));
      out << '\n';
    }
    json jm;
    jm["tool_version"] = csm::kVersion;
    jm["treated_ids"] = p.dm.treated_ids;
    jm["control_ids"] = p.dm.control_ids;
    write_with_mirror(cfg, "distances", out.str(), jm);

    const auto hists = csm::topk_distance_histogram(p.dm, cfg.k_hist, cfg.hist_bins);
    std::ostringstream hout;
    hout << header_line(cfg, "diagnose-distances-hist");
    hout << "rank,bin_lo,bin_hi,count,q25,q50,q75,q90\n";
    json jh = json::array();
    for (const auto& hist : hists) {
      for (std::size_t b = 0; b < hist.counts.size(); ++b) {
        hout << hist.rank << ',' << format_double(hist.edges[b]) << ','
             << format_double(hist.edges[b + 1]) << ',' << hist.counts[b] << ','
             << format_double(hist.q25) << ',' << format_double(hist.q50) << ','
             << format_double(hist.q75) << ',' << format_double(hist.q90) << '\n';
      }
      json jr;
      jr["rank"] = hist.rank;
      jr["edges"] = hist.edges;
      jr["counts"] = hist.counts;
      jr["q25"] = hist.q25;
      jr["q50"] = hist.q50;
      jr["q75"] = hist.q75;
      jr["q90"] = hist.q90;
      jh.push_back(jr);
    }
    write_with_mirror(cfg, "distance_hist", hout.str(), jh);
    std::cout << "wrote distances.csv and distance_hist.csv under " << cfg.out_dir << "\n";
    return 0;
  }

  const auto scheme = resolve_scheme(cfg);
  const auto ws = csm::assign_weights(p.mr, p.ds, p.spec, scheme, 1e-8, cfg.threads);

  if (which == "balance") {
    const auto subset = resolve_subset(cfg, p.mr, p.ds, std::cerr);
    const auto report = csm::balance_report(p.ds, ws, subset, p.spec);
    std::ostringstream out;
    out << header_line(cfg, "diagnose-balance");
    out << "covariate,treated_mean,control_mean,abs_diff,bound,within_bound\n";
    for (const auto& row : report.rows) {
      out << csm::csv_escape(p.ds.column_names[row.covariate]) << ','
          << format_double(row.treated_mean) << ',' << format_double(row.control_mean)
          << ',' << format_double(row.abs_diff) << ',' << format_double(row.bound) << ','
          << (row.within_bound ? 1 : 0) << '\n';
    }
    out << "joint," << format_double(report.joint_distance) << ",,"
        << format_double(report.joint_bound) << ',' << (report.joint_within ? 1 : 0)
        << '\n';
    json jm;
    jm["tool_version"] = csm::kVersion;
    jm["joint_distance"] = report.joint_distance;
    jm["joint_bound"] = report.joint_bound;
    jm["subset_size"] = report.subset_size;
    write_with_mirror(cfg, "balance", out.str(), jm);
    std::cout << "wrote balance.csv under " << cfg.out_dir << "\n";
    return 0;
  }

  if (which == "love") {
    const auto series = csm::love_plot_series(p.ds, p.mr, ws, p.spec);
    std::ostringstream out;
    out << header_line(cfg, "diagnose-love");
    out << "subset_index,subset_size,max_c_t,covariate,treated_mean,control_mean,"
           "abs_diff,bound,within_bound\n";
    for (const auto& row : series) {
      for (const auto& brow : row.report.rows) {
        out << row.subset_index << ',' << row.subset_size << ','
            << format_double(row.max_c_t) << ','
            << csm::csv_escape(p.ds.column_names[brow.covariate]) << ','
            << format_double(brow.treated_mean) << ','
            << format_double(brow.control_mean) << ',' << format_double(brow.abs_diff)
            << ',' << format_double(brow.bound) << ',' << (brow.within_bound ? 1 : 0)
            << '\n';
      }
    }
    json jm;
    jm["tool_version"] = csm::kVersion;
    jm["n_subsets"] = series.size();
    write_with_mirror(cfg, "love", out.str(), jm);
    std::cout << "wrote love.csv under " << cfg.out_dir << " (" << series.size()
              << " nested subsets)\n";
    return 0;
  }

  if (which == "frontier") {
    const auto series = csm::frontier_series(p.ds, p.mr, ws, p.spec, cfg.level);
    std::ostringstream out;
    out << header_line(cfg, "diagnose-frontier");
    out << "subset_index,subset_size,max_c_t,tau_hat,se,ci_lo,ci_hi,ess_control,"
           "estimand\n";
    for (const auto& row : series) {
      const auto& est = row.estimate;
      out << row.subset_index << ',' << row.subset_size << ','
          << format_double(row.max_c_t) << ',' << format_double(est.tau_hat) << ','
          << (est.has_se ? format_double(est.se_hat) : "unavailable") << ','
          << (est.has_se ? format_double(est.ci_lo) : "") << ','
          << (est.has_se ? format_double(est.ci_hi) : "") << ','
          << format_double(est.ess_control) << ',' << to_string(est.estimand) << '\n';
    }
    json jm;
    jm["tool_version"] = csm::kVersion;
    jm["n_subsets"] = series.size();
    write_with_mirror(cfg, "frontier", out.str(), jm);
    std::cout << "wrote frontier.csv under " << cfg.out_dir << " (" << series.size()
              << " nested subsets)\n";
    return 0;
  }

  csm::fail(csm::ErrorCode::InvalidArgument, "unknown diagnose target " + which);
}

int cmd_simulate_coverage(const RunConfig& cfg) {
  const int trials = cfg.trials > 0 ? cfg.trials : 500;
  const auto report =
      csm::run_coverage_study(cfg.seed, trials, csm::ToyDgpConfig{},
                              csm::EstimatorSettings{}, cfg.threads);
  std::ostringstream out;
  out << header_line(cfg, "simulate-coverage");
  out << "overlap,n_trials,ess_control_avg,se_hat_avg,se_true,bias,rmse,coverage,"
         "mc_se_bias,mc_se_rmse,mc_se_coverage,mc_se_se_true\n";
  for (const auto& row : report.rows) {
    out << to_string(row.level) << ',' << row.n_trials << ','
        << format_double(row.ess_control_avg) << ',' << format_double(row.se_hat_avg)
        << ',' << format_double(row.se_true) << ',' << format_double(row.bias) << ','
        << format_double(row.rmse) << ',' << format_double(row.coverage) << ','
        << format_double(row.mc_se_bias) << ',' << format_double(row.mc_se_rmse) << ','
        << format_double(row.mc_se_coverage) << ',' << format_double(row.mc_se_se_true)
        << '\n';
  }
  json jm;
  jm["tool_version"] = csm::kVersion;
  jm["master_seed"] = report.master_seed;
  jm["n_trials"] = report.n_trials;
  write_with_mirror(cfg, "coverage", out.str(), jm);

  std::printf("%-10s %8s %8s %8s %8s %8s %8s\n", "overlap", "ess", "avg_se", "true_se",
              "bias", "rmse", "coverage");
  for (const auto& row : report.rows) {
    std::printf("%-10s %8.1f %8.3f %8.3f %8.3f %8.3f %8.3f\n", to_string(row.level),
                row.ess_control_avg, row.se_hat_avg, row.se_true, row.bias, row.rmse,
                row.coverage);
  }
  return 0;
}

int cmd_simulate_compare(const RunConfig& cfg) {
  const int trials = cfg.trials > 0 ? cfg.trials : 250;
  const auto report = csm::run_method_comparison(
      cfg.seed, trials, csm::ToyDgpConfig{}, csm::method_comparison_settings(),
      cfg.threads);
  std::ostringstream out;
  out << header_line(cfg, "simulate-compare");
  out << "method,n_trials,rmse,abs_bias,mc_se_rmse,mc_se_bias\n";
  for (const auto& row : report.rows) {
    out << to_string(row.method) << ',' << row.n_trials << ',' << format_double(row.rmse)
        << ',' << format_double(row.abs_bias) << ',' << format_double(row.mc_se_rmse)
        << ',' << format_double(row.mc_se_bias) << '\n';
  }
  json jm;
  jm["tool_version"] = csm::kVersion;
  jm["master_seed"] = report.master_seed;
  jm["n_trials"] = report.n_trials;
  write_with_mirror(cfg, "compare", out.str(), jm);

  std::printf("%-16s %8s %10s %10s\n", "method", "trials", "rmse", "abs_bias");
  for (const auto& row : report.rows) {
    std::printf("%-16s %8d %10.4f %10.4f\n", to_string(row.method), row.n_trials,
                row.rmse, row.abs_bias);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caliper synthetic matching"};
  app.require_subcommand(1);

  RunConfig cfg;

  auto add_data_flags = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "input CSV path")->required();
    sub->add_option("--treatment", cfg.treatment, "treatment column (0/1)")->required();
    sub->add_option("--outcome", cfg.outcome, "outcome column")->required();
    sub->add_option("--covariates", cfg.covariates,
                    "comma-separated covariate columns (default: all remaining)");
    sub->add_option("--id", cfg.id_column, "id column (default: 'id' or row number)");
    auto* cal = sub->add_option("--caliper-config", cfg.caliper_config,
                                "caliper config file (pi.<col>=..., c=, ...)");
    auto* autocal = sub->add_option("--auto-caliper", cfg.auto_caliper_bins,
                                    "derive pi from equally spaced bins (default 5)");
    cal->excludes(autocal);
    sub->add_option("--norm", cfg.norm, "l2|linf (default linf)");
    sub->add_option("--policy", cfg.policy, "fixed|adaptive|kbounded");
    sub->add_option("--alpha", cfg.alpha, "adaptive inflation factor (>= 1)");
    sub->add_option("--c", cfg.c, "global distance caliper");
    sub->add_option("--kmin", cfg.k_min, "k-bounded: minimum matches");
    sub->add_option("--kmax", cfg.k_max, "k-bounded: maximum matches");
    sub->add_option("--out", cfg.out_dir, "output directory (default .)");
    sub->add_flag("--json", cfg.json_mirror, "also write JSON mirrors");
    sub->add_option("--threads", cfg.threads, "worker threads (default 1)");
  };

  auto* match = app.add_subcommand("match", "radius matching; writes match.csv");
  add_data_flags(match);

  auto* est = app.add_subcommand("estimate", "end-to-end effect estimate");
  add_data_flags(est);
  est->add_option("--scheme", cfg.scheme, "scm|uniform|1nn (default scm)");
  est->add_option("--subset", cfg.subset, "feasible|all|maxc=<x> (default feasible)");
  est->add_option("--level", cfg.level, "confidence level (default 0.95)");

  auto* diag = app.add_subcommand("diagnose", "balance and distance diagnostics");
  diag->require_subcommand(1);
  std::vector<std::string> diag_kinds = {"balance", "love", "frontier", "distances"};
  for (const auto& kind : diag_kinds) {
    auto* sub = diag->add_subcommand(kind);
    add_data_flags(sub);
    if (kind == "balance") {
      sub->add_option("--scheme", cfg.scheme, "scm|uniform|1nn");
      sub->add_option("--subset", cfg.subset, "feasible|all|maxc=<x>");
    } else if (kind == "love" || kind == "frontier") {
      sub->add_option("--scheme", cfg.scheme, "scm|uniform|1nn");
      sub->add_option("--level", cfg.level, "confidence level");
    } else {
      sub->add_option("--k", cfg.k_hist, "histogram ranks (default 3)");
      sub->add_option("--bins", cfg.hist_bins, "histogram bins (default 30)");
    }
  }

  auto* sim = app.add_subcommand("simulate", "Monte Carlo studies on the toy DGP");
  sim->require_subcommand(1);
  for (const char* kind : {"coverage", "compare"}) {
    auto* sub = sim->add_subcommand(kind);
    sub->add_option("--trials", cfg.trials, "trial count (default 500/250)");
    sub->add_option("--seed", cfg.seed, "master seed (default 12345)");
    sub->add_option("--out", cfg.out_dir, "output directory (default .)");
    sub->add_flag("--json", cfg.json_mirror, "also write JSON mirrors");
    sub->add_option("--threads", cfg.threads, "worker threads (default 1)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? 0 : 2;
  } catch (...) {
    return 2;
  }

  try {
    if (match->parsed()) return cmd_match(cfg);
    if (est->parsed()) return cmd_estimate(cfg);
    if (diag->parsed()) {
      for (const auto& kind : diag_kinds)
        if (diag->get_subcommand(kind)->parsed()) return cmd_diagnose(cfg, kind);
    }
    if (sim->parsed()) {
      if (sim->get_subcommand("coverage")->parsed()) return cmd_simulate_coverage(cfg);
      if (sim->get_subcommand("compare")->parsed()) return cmd_simulate_compare(cfg);
    }
  } catch (const csm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_solver_defect() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (...) {
    return 3;
  }
  return 2;
}
