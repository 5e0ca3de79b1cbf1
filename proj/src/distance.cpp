#include "csm/distance.hpp"

#include <cmath>
#include <thread>

#include "csm/kernels.hpp"

namespace csm {

double scaled_distance(std::span<const double> x, std::span<const double> y,
                       const ScalingMatrix& v, Norm norm) {
  if (x.size() != y.size() || x.size() != v.p())
    fail(ErrorCode::DimensionMismatch,
         "scaled_distance: x/y/V sizes " + std::to_string(x.size()) + "/" +
             std::to_string(y.size()) + "/" + std::to_string(v.p()));
  double acc = 0.0;
  if (norm == Norm::L2) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double diff = x[k] - y[k];
      const double scaled = diff * v.v_diag[k];
      acc = acc + scaled * scaled;
    }
    return std::sqrt(acc);
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - y[k];
    const double scaled = std::fabs(diff * v.v_diag[k]);
    acc = scaled > acc ? scaled : acc;
  }
  return acc;
}

DistanceMatrix distance_matrix(const Dataset& ds, const CaliperSpec& spec,
                               int threads) {
  spec.validate();
  if (spec.pi.size() != ds.p())
    fail(ErrorCode::DimensionMismatch, "caliper spec does not match dataset width");
  const ScalingMatrix v = scaling_matrix(spec);

  DistanceMatrix dm;
  dm.treated_rows = ds.treated_rows();
  dm.control_rows = ds.control_rows();
  for (int r : dm.treated_rows) dm.treated_ids.push_back(ds.ids[static_cast<std::size_t>(r)]);
  for (int r : dm.control_rows) dm.control_ids.push_back(ds.ids[static_cast<std::size_t>(r)]);
  dm.d = Matrix(dm.treated_rows.size(), dm.control_rows.size());

  const auto packed = kernels::pack_rows(ds.x, dm.control_rows);
  const std::size_t n_t = dm.treated_rows.size();

  auto run_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const auto query = ds.x.row(static_cast<std::size_t>(dm.treated_rows[t]));
      kernels::distance_rows(query.data(), packed, v.v_diag.data(), spec.norm,
                             dm.d.row(t).data());
    }
  };

  if (threads <= 1 || n_t < 2) {
    run_rows(0, n_t);
    return dm;
  }
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n_t);
  std::vector<std::thread> workers;
  const std::size_t chunk = (n_t + n_workers - 1) / n_workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(begin + chunk, n_t);
    if (begin >= end) break;
    workers.emplace_back(run_rows, begin, end);
  }
  for (auto& worker : workers) worker.join();
  return dm;
}

}  // namespace csm
