#include "csm/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace csm {

namespace {

void sort_matched(std::vector<MatchedControl>& matched, const Dataset& ds) {
  std::sort(matched.begin(), matched.end(),
            [&](const MatchedControl& a, const MatchedControl& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              return ds.ids[static_cast<std::size_t>(a.control_row)] <
                     ds.ids[static_cast<std::size_t>(b.control_row)];
            });
}

}  // namespace

const char* to_string(MatchMethod method) {
  switch (method) {
    case MatchMethod::Radius: return "RADIUS";
    case MatchMethod::OneNn: return "ONE_NN";
    case MatchMethod::Cem: return "CEM";
  }
  return "?";
}

std::size_t MatchResult::feasible_count() const {
  std::size_t count = 0;
  for (const auto& unit : units) count += unit.feasible ? 1 : 0;
  return count;
}

std::vector<int> MatchResult::feasible_treated_rows() const {
  std::vector<int> rows;
  for (const auto& unit : units)
    if (unit.feasible) rows.push_back(unit.treated_row);
  return rows;
}

std::vector<int> MatchResult::all_treated_rows() const {
  std::vector<int> rows;
  for (const auto& unit : units) rows.push_back(unit.treated_row);
  return rows;
}

std::vector<int> MatchResult::matched_treated_rows() const {
  std::vector<int> rows;
  for (const auto& unit : units)
    if (!unit.matched.empty()) rows.push_back(unit.treated_row);
  return rows;
}

MatchResult radius_match(const Dataset& ds, const DistanceMatrix& dm,
                         const CaliperSpec& spec) {
  spec.validate();
  const std::size_t n_c = dm.n_controls();
  if (n_c == 0) fail(ErrorCode::EmptyControlPool, "no control units to match against");

  MatchResult mr;
  mr.method = MatchMethod::Radius;
  mr.spec_used = spec;
  mr.units.resize(dm.n_treated());

  std::vector<double> sorted;
  for (std::size_t t = 0; t < dm.n_treated(); ++t) {
    auto& unit = mr.units[t];
    unit.treated_row = dm.treated_rows[t];
    unit.treated_id = ds.ids[static_cast<std::size_t>(unit.treated_row)];
    const auto row = dm.d.row(t);

    double d_t = row[0];
    for (std::size_t j = 1; j < n_c; ++j) d_t = std::min(d_t, row[j]);
    unit.d_t = d_t;
    unit.feasible = d_t <= spec.c;

    switch (spec.policy) {
      case CaliperPolicy::Fixed:
        unit.c_t = spec.c;
        break;
      case CaliperPolicy::Adaptive:
        unit.c_t = std::max(spec.c, spec.alpha * d_t);
        break;
      case CaliperPolicy::KBounded: {
        sorted.assign(row.begin(), row.end());
        std::sort(sorted.begin(), sorted.end());
        const auto kth = [&](int k) {
          const std::size_t idx =
              std::min<std::size_t>(static_cast<std::size_t>(k), n_c) - 1;
          return sorted[idx];
        };
        unit.c_t = std::max(kth(spec.k_min), std::min(spec.c, kth(spec.k_max)));
        break;
      }
    }

    if (spec.policy == CaliperPolicy::Fixed && !unit.feasible) continue;
    for (std::size_t j = 0; j < n_c; ++j) {
      if (row[j] <= unit.c_t)
        unit.matched.push_back({dm.control_rows[j], row[j]});
    }
    sort_matched(unit.matched, ds);
  }
  return mr;
}

MatchResult one_nn_match(const Dataset& ds, const DistanceMatrix& dm) {
  const std::size_t n_c = dm.n_controls();
  if (n_c == 0) fail(ErrorCode::EmptyControlPool, "no control units to match against");

  MatchResult mr;
  mr.method = MatchMethod::OneNn;
  mr.spec_used.pi.assign(ds.p(), 1.0);  // placeholder spec; distances come from dm
  mr.units.resize(dm.n_treated());
  for (std::size_t t = 0; t < dm.n_treated(); ++t) {
    auto& unit = mr.units[t];
    unit.treated_row = dm.treated_rows[t];
    unit.treated_id = ds.ids[static_cast<std::size_t>(unit.treated_row)];
    const auto row = dm.d.row(t);
    double d_t = row[0];
    for (std::size_t j = 1; j < n_c; ++j) d_t = std::min(d_t, row[j]);
    unit.d_t = d_t;
    unit.c_t = d_t;
    unit.feasible = true;
    for (std::size_t j = 0; j < n_c; ++j) {
      if (row[j] == d_t) unit.matched.push_back({dm.control_rows[j], row[j]});
    }
    sort_matched(unit.matched, ds);
  }
  return mr;
}

MatchResult cem_match(const Dataset& ds, int bins) {
  if (bins < 1) fail(ErrorCode::InvalidArgument, "bins must be >= 1");
  ds.validate();

  const std::size_t p = ds.p();
  std::vector<bool> binary(p);
  std::vector<double> lo(p), width(p);
  for (std::size_t k = 0; k < p; ++k) {
    binary[k] = is_binary_column(ds, k);
    if (binary[k]) continue;
    double mn = ds.x(0, k), mx = ds.x(0, k);
    for (std::size_t i = 1; i < ds.n(); ++i) {
      mn = std::min(mn, ds.x(i, k));
      mx = std::max(mx, ds.x(i, k));
    }
    if (!(mx > mn))
      fail(ErrorCode::ConstantNonBinaryColumn,
           "covariate '" + ds.column_names[k] + "' has zero range and is not binary");
    lo[k] = mn;
    width[k] = (mx - mn) / static_cast<double>(bins);
  }

  auto signature = [&](std::size_t row) {
    std::vector<int> sig(p);
    for (std::size_t k = 0; k < p; ++k) {
      if (binary[k]) {
        sig[k] = static_cast<int>(ds.x(row, k));
        continue;
      }
      int bin = static_cast<int>(std::floor((ds.x(row, k) - lo[k]) / width[k]));
      if (bin >= bins) bin = bins - 1;  // top bin right-closed
      if (bin < 0) bin = 0;
      sig[k] = bin;
    }
    return sig;
  };

  std::map<std::vector<int>, std::vector<int>> control_strata;
  for (int j : ds.control_rows()) control_strata[signature(static_cast<std::size_t>(j))].push_back(j);

  // Matched CEM pairs still carry scaled distances (coarsening width as pi,
  // matching the equally-sized comparison of the two methods).
  CaliperSpec spec;
  spec.pi.resize(p);
  for (std::size_t k = 0; k < p; ++k)
    spec.pi[k] = binary[k] ? 1.0 : width[k];
  spec.c = 1.0;
  spec.norm = Norm::Linf;
  const ScalingMatrix v = scaling_matrix(spec);

  MatchResult mr;
  mr.method = MatchMethod::Cem;
  mr.spec_used = spec;
  for (int t : ds.treated_rows()) {
    TreatedMatch unit;
    unit.treated_row = t;
    unit.treated_id = ds.ids[static_cast<std::size_t>(t)];
    auto it = control_strata.find(signature(static_cast<std::size_t>(t)));
    if (it != control_strata.end()) {
      for (int j : it->second) {
        const double d = scaled_distance(ds.x.row(static_cast<std::size_t>(t)),
                                         ds.x.row(static_cast<std::size_t>(j)), v,
                                         spec.norm);
        unit.matched.push_back({j, d});
      }
    }
    if (unit.matched.empty()) {
      unit.d_t = std::numeric_limits<double>::infinity();
      unit.c_t = spec.c;
      unit.feasible = false;
    } else {
      sort_matched(unit.matched, ds);
      unit.d_t = unit.matched.front().distance;
      unit.c_t = spec.c;
      unit.feasible = true;
    }
    mr.units.push_back(std::move(unit));
  }
  return mr;
}

std::vector<std::vector<int>> feasible_subsets(const MatchResult& mr) {
  std::vector<int> feasible;
  std::vector<std::size_t> infeasible;
  for (std::size_t i = 0; i < mr.units.size(); ++i) {
    if (mr.units[i].feasible) feasible.push_back(mr.units[i].treated_row);
    else infeasible.push_back(i);
  }
  // Infeasible units join in order of ascending c_t, ties by unit id.
  std::sort(infeasible.begin(), infeasible.end(), [&](std::size_t a, std::size_t b) {
    if (mr.units[a].c_t != mr.units[b].c_t) return mr.units[a].c_t < mr.units[b].c_t;
    return mr.units[a].treated_id < mr.units[b].treated_id;
  });

  std::vector<std::vector<int>> subsets;
  std::vector<int> current = feasible;
  std::sort(current.begin(), current.end());
  if (!current.empty()) subsets.push_back(current);
  for (std::size_t idx : infeasible) {
    current.push_back(mr.units[idx].treated_row);
    std::sort(current.begin(), current.end());
    subsets.push_back(current);
  }
  return subsets;
}

}  // namespace csm
