#include "csm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "csm/io_util.hpp"

namespace csm {

std::vector<int> Dataset::treated_rows() const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] == 1) rows.push_back(static_cast<int>(i));
  return rows;
}

std::vector<int> Dataset::control_rows() const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (z[i] == 0) rows.push_back(static_cast<int>(i));
  return rows;
}

std::size_t Dataset::n_treated() const {
  return static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
}

void Dataset::validate() const {
  const std::size_t n_units = ids.size();
  if (n_units < 2) fail(ErrorCode::InvalidArgument, "dataset needs at least 2 units");
  if (x.rows() != n_units || z.size() != n_units || y.size() != n_units)
    fail(ErrorCode::DimensionMismatch, "ids/X/Z/Y row counts disagree");
  if (x.cols() < 1) fail(ErrorCode::InvalidArgument, "dataset needs at least 1 covariate");
  if (column_names.size() != x.cols())
    fail(ErrorCode::DimensionMismatch, "column_names does not match covariate count");

  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) fail(ErrorCode::DuplicateId, "duplicate unit id: " + id);
  }
  for (std::size_t i = 0; i < n_units; ++i) {
    if (z[i] != 0 && z[i] != 1)
      fail(ErrorCode::NonBinaryTreatment, "unit " + ids[i] + " has treatment outside {0,1}");
    if (!std::isfinite(y[i]))
      fail(ErrorCode::NonFiniteValue, "non-finite outcome for unit " + ids[i]);
    for (std::size_t k = 0; k < x.cols(); ++k) {
      if (!std::isfinite(x(i, k)))
        fail(ErrorCode::NonFiniteValue,
             "non-finite covariate " + column_names[k] + " for unit " + ids[i]);
    }
  }
  if (n_treated() == 0) fail(ErrorCode::NoTreatedUnits, "no treated units");
  if (n_controls() == 0) fail(ErrorCode::NoControlUnits, "no control units");
}

namespace {

double parse_cell_double(const std::string& cell, const std::string& column,
                         std::size_t row_number) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  double value = 0.0;
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(value))
    fail(ErrorCode::NonFiniteValue, "column '" + column + "' row " +
                                        std::to_string(row_number) +
                                        " is not a finite number: '" + cell + "'");
  return value;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const std::string& role) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    fail(ErrorCode::MissingColumn, role + " column '" + name + "' not in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset parse_dataset_csv(const std::string& csv_text, const SchemaMapping& schema,
                          const std::string& origin) {
  auto rows = parse_csv(csv_text);
  if (rows.size() < 2) fail(ErrorCode::IoError, origin + ": needs a header and data rows");
  const auto& header = rows.front();

  if (schema.treatment.empty()) fail(ErrorCode::MissingColumn, "no treatment column named");
  if (schema.outcome.empty()) fail(ErrorCode::MissingColumn, "no outcome column named");

  const std::size_t z_col = find_column(header, schema.treatment, "treatment");
  const std::size_t y_col = find_column(header, schema.outcome, "outcome");

  std::size_t id_col = header.size();  // sentinel: synthesize ids
  if (!schema.id.empty()) {
    id_col = find_column(header, schema.id, "id");
  } else {
    auto it = std::find(header.begin(), header.end(), "id");
    if (it != header.end()) {
      const auto idx = static_cast<std::size_t>(it - header.begin());
      if (idx != z_col && idx != y_col) id_col = idx;
    }
  }

  std::vector<std::size_t> x_cols;
  std::vector<std::string> x_names;
  if (!schema.covariates.empty()) {
    for (const auto& name : schema.covariates) {
      x_cols.push_back(find_column(header, name, "covariate"));
      x_names.push_back(name);
    }
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == z_col || c == y_col || c == id_col) continue;
      x_cols.push_back(c);
      x_names.push_back(header[c]);
    }
  }
  if (x_cols.empty()) fail(ErrorCode::MissingColumn, "no covariate columns");

  const std::size_t n_units = rows.size() - 1;
  Dataset ds;
  ds.column_names = x_names;
  ds.x = Matrix(n_units, x_cols.size());
  ds.z.resize(n_units);
  ds.y.resize(n_units);
  ds.ids.reserve(n_units);

  for (std::size_t r = 0; r < n_units; ++r) {
    const auto& cells = rows[r + 1];
    const std::size_t row_number = r + 2;  // 1-based, counting the header
    if (cells.size() != header.size())
      fail(ErrorCode::IoError, origin + ": row " + std::to_string(row_number) +
                                   " has " + std::to_string(cells.size()) +
                                   " fields, expected " + std::to_string(header.size()));
    const double zval = parse_cell_double(cells[z_col], schema.treatment, row_number);
    if (zval != 0.0 && zval != 1.0)
      fail(ErrorCode::NonBinaryTreatment,
           "column '" + schema.treatment + "' row " + std::to_string(row_number) +
               " has value " + cells[z_col] + ", expected 0 or 1");
    ds.z[r] = static_cast<int>(zval);
    ds.y[r] = parse_cell_double(cells[y_col], schema.outcome, row_number);
    for (std::size_t k = 0; k < x_cols.size(); ++k)
      ds.x(r, k) = parse_cell_double(cells[x_cols[k]], x_names[k], row_number);
    ds.ids.push_back(id_col < header.size() ? cells[id_col] : std::to_string(r + 1));
  }

  ds.validate();
  return ds;
}

Dataset load_dataset(const std::string& path, const SchemaMapping& schema) {
  return parse_dataset_csv(read_text_file(path), schema, path);
}

std::string dataset_to_csv(const Dataset& ds) {
  std::ostringstream out;
  out << "id";
  for (const auto& name : ds.column_names) out << ',' << csv_escape(name);
  out << ",Z,Y\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    out << csv_escape(ds.ids[i]);
    for (std::size_t k = 0; k < ds.p(); ++k) out << ',' << format_double(ds.x(i, k));
    out << ',' << ds.z[i] << ',' << format_double(ds.y[i]) << '\n';
  }
  return out.str();
}

void save_dataset(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_to_csv(ds));
}

const char* to_string(CaliperPolicy policy) {
  switch (policy) {
    case CaliperPolicy::Fixed: return "FIXED";
    case CaliperPolicy::Adaptive: return "ADAPTIVE";
    case CaliperPolicy::KBounded: return "KBOUNDED";
  }
  return "?";
}

const char* to_string(Norm norm) {
  switch (norm) {
    case Norm::L2: return "L2";
    case Norm::Linf: return "LINF";
  }
  return "?";
}

void CaliperSpec::validate() const {
  if (pi.empty()) fail(ErrorCode::InvalidArgument, "caliper spec has no covariates");
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (!(pi[k] > 0.0) || !std::isfinite(pi[k]))
      fail(ErrorCode::InvalidArgument,
           "pi[" + std::to_string(k) + "] must be positive, got " + format_double(pi[k]));
  }
  if (!(c > 0.0) || !std::isfinite(c))
    fail(ErrorCode::InvalidArgument, "global caliper c must be positive");
  if (!(alpha >= 1.0) || !std::isfinite(alpha))
    fail(ErrorCode::InvalidArgument, "alpha must be >= 1");
  if (policy == CaliperPolicy::KBounded) {
    if (k_min < 1) fail(ErrorCode::InvalidArgument, "k_min must be >= 1");
    if (k_max < k_min) fail(ErrorCode::InvalidArgument, "k_max must be >= k_min");
  }
}

ScalingMatrix scaling_matrix(const CaliperSpec& spec) {
  ScalingMatrix v;
  v.v_diag.resize(spec.pi.size());
  for (std::size_t k = 0; k < spec.pi.size(); ++k) v.v_diag[k] = 1.0 / spec.pi[k];
  return v;
}

bool is_binary_column(const Dataset& ds, std::size_t k) {
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double v = ds.x(i, k);
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

CaliperSpec default_caliper(const Dataset& ds, int bins, double binary_pi) {
  if (bins < 1) fail(ErrorCode::InvalidArgument, "bins must be >= 1");
  if (!(binary_pi > 0.0)) fail(ErrorCode::InvalidArgument, "binary_pi must be positive");
  CaliperSpec spec;
  spec.pi.resize(ds.p());
  for (std::size_t k = 0; k < ds.p(); ++k) {
    if (is_binary_column(ds, k)) {
      spec.pi[k] = binary_pi;
      continue;
    }
    double lo = ds.x(0, k), hi = ds.x(0, k);
    for (std::size_t i = 1; i < ds.n(); ++i) {
      lo = std::min(lo, ds.x(i, k));
      hi = std::max(hi, ds.x(i, k));
    }
    if (!(hi > lo))
      fail(ErrorCode::ConstantNonBinaryColumn,
           "covariate '" + ds.column_names[k] + "' has zero range and is not binary");
    spec.pi[k] = (hi - lo) / static_cast<double>(bins);
  }
  spec.c = 1.0;
  spec.alpha = 1.0;
  spec.policy = CaliperPolicy::Fixed;
  spec.norm = Norm::Linf;
  spec.validate();
  return spec;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

CaliperSpec parse_caliper_config(const std::string& text,
                                 const std::vector<std::string>& column_names) {
  CaliperSpec spec;
  spec.pi.assign(column_names.size(), 0.0);
  std::vector<bool> have_pi(column_names.size(), false);

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::IoError, "caliper config line " + std::to_string(line_no) +
                                   " is not key=value: " + stripped);
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    auto as_double = [&](const char* what) {
      double v = 0.0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), v);
      if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        fail(ErrorCode::IoError, std::string(what) + " value not numeric: " + value);
      return v;
    };

    if (key.rfind("pi.", 0) == 0) {
      const std::string column = key.substr(3);
      auto it = std::find(column_names.begin(), column_names.end(), column);
      if (it == column_names.end())
        fail(ErrorCode::MissingColumn, "pi entry for unknown covariate '" + column + "'");
      const auto k = static_cast<std::size_t>(it - column_names.begin());
      spec.pi[k] = as_double("pi");
      have_pi[k] = true;
    } else if (key == "c") {
      spec.c = as_double("c");
    } else if (key == "alpha") {
      spec.alpha = as_double("alpha");
    } else if (key == "kmin") {
      spec.k_min = static_cast<int>(as_double("kmin"));
    } else if (key == "kmax") {
      spec.k_max = static_cast<int>(as_double("kmax"));
    } else if (key == "policy") {
      if (value == "FIXED") spec.policy = CaliperPolicy::Fixed;
      else if (value == "ADAPTIVE") spec.policy = CaliperPolicy::Adaptive;
      else if (value == "KBOUNDED") spec.policy = CaliperPolicy::KBounded;
      else fail(ErrorCode::IoError, "unknown policy: " + value);
    } else if (key == "norm") {
      if (value == "L2") spec.norm = Norm::L2;
      else if (value == "LINF") spec.norm = Norm::Linf;
      else fail(ErrorCode::IoError, "unknown norm: " + value);
    } else {
      fail(ErrorCode::IoError, "unknown caliper config key: " + key);
    }
  }
  for (std::size_t k = 0; k < column_names.size(); ++k) {
    if (!have_pi[k])
      fail(ErrorCode::MissingColumn, "caliper config missing pi." + column_names[k]);
  }
  spec.validate();
  return spec;
}

CaliperSpec load_caliper_config(const std::string& path,
                                const std::vector<std::string>& column_names) {
  return parse_caliper_config(read_text_file(path), column_names);
}

std::string caliper_config_to_string(const CaliperSpec& spec,
                                     const std::vector<std::string>& column_names) {
  if (spec.pi.size() != column_names.size())
    fail(ErrorCode::DimensionMismatch, "spec/column count mismatch");
  std::ostringstream out;
  for (std::size_t k = 0; k < column_names.size(); ++k)
    out << "pi." << column_names[k] << '=' << format_double(spec.pi[k]) << '\n';
  out << "c=" << format_double(spec.c) << '\n';
  out << "alpha=" << format_double(spec.alpha) << '\n';
  out << "policy=" << to_string(spec.policy) << '\n';
  if (spec.policy == CaliperPolicy::KBounded)
    out << "kmin=" << spec.k_min << "\nkmax=" << spec.k_max << '\n';
  out << "norm=" << to_string(spec.norm) << '\n';
  return out.str();
}

void save_caliper_config(const CaliperSpec& spec,
                         const std::vector<std::string>& column_names,
                         const std::string& path) {
  write_text_file(path, caliper_config_to_string(spec, column_names));
}

}  // namespace csm
