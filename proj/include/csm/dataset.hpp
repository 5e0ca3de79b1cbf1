#pragma once

#include <string>
#include <vector>

#include "csm/matrix.hpp"

namespace csm {

// Units with covariates, binary treatment, and a real outcome. Immutable
// after construction/validation; safe to share across threads.
struct Dataset {
  std::vector<std::string> ids;           // unique unit identifiers, row order
  Matrix x;                               // n x p covariates
  std::vector<int> z;                     // treatment indicator, 0/1
  std::vector<double> y;                  // outcome
  std::vector<std::string> column_names;  // p covariate names

  std::size_t n() const { return ids.size(); }
  std::size_t p() const { return x.cols(); }

  std::vector<int> treated_rows() const;
  std::vector<int> control_rows() const;
  std::size_t n_treated() const;
  std::size_t n_controls() const { return n() - n_treated(); }

  // Enforces the structural invariants; throws on violation.
  void validate() const;
};

// Column-role mapping for CSV ingestion. An empty covariate list means "all
// remaining columns". An empty id column name means: use a column literally
// named "id" if present and unclaimed, else synthesize "1", "2", ... row ids.
struct SchemaMapping {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> covariates;
  std::string id;
};

Dataset load_dataset(const std::string& path, const SchemaMapping& schema);
Dataset parse_dataset_csv(const std::string& csv_text, const SchemaMapping& schema,
                          const std::string& origin = "<string>");

// Writes id,<covariates...>,Z,Y with shortest round-trip number formatting,
// so load(save(ds)) reproduces the dataset bit-exactly.
void save_dataset(const Dataset& ds, const std::string& path);
std::string dataset_to_csv(const Dataset& ds);

enum class CaliperPolicy { Fixed, Adaptive, KBounded };
enum class Norm { L2, Linf };

const char* to_string(CaliperPolicy policy);
const char* to_string(Norm norm);

// Covariate-wise calipers pi (one per covariate, covariate units), a global
// caliper c on the scaled metric, and the matching policy.
struct CaliperSpec {
  std::vector<double> pi;
  double c = 1.0;
  double alpha = 1.0;  // adaptive inflation factor, >= 1
  CaliperPolicy policy = CaliperPolicy::Fixed;
  int k_min = 1;  // KBounded only
  int k_max = 1;
  Norm norm = Norm::Linf;

  void validate() const;
};

// Diagonal scaling V = diag{1/pi}.
struct ScalingMatrix {
  std::vector<double> v_diag;

  std::size_t p() const { return v_diag.size(); }
};

ScalingMatrix scaling_matrix(const CaliperSpec& spec);

// Default spec from the data: each continuous covariate gets pi_k =
// range / bins, binary covariates get a near-exact caliper; c = 1, fixed
// policy, Linf norm. A covariate is binary iff its observed values are a
// subset of {0, 1}.
CaliperSpec default_caliper(const Dataset& ds, int bins = 5,
                            double binary_pi = 1.0 / 1000.0);

bool is_binary_column(const Dataset& ds, std::size_t k);

// Flat key=value config: one pi.<column> entry per covariate plus c, alpha,
// policy, kmin, kmax, norm.
CaliperSpec parse_caliper_config(const std::string& text,
                                 const std::vector<std::string>& column_names);
CaliperSpec load_caliper_config(const std::string& path,
                                const std::vector<std::string>& column_names);
std::string caliper_config_to_string(const CaliperSpec& spec,
                                     const std::vector<std::string>& column_names);
void save_caliper_config(const CaliperSpec& spec,
                         const std::vector<std::string>& column_names,
                         const std::string& path);

}  // namespace csm
