#pragma once

// Shared builders and random-instance generators for the test suites.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csm/dataset.hpp"
#include "csm/matrix.hpp"
#include "csm/rng.hpp"

namespace csm::testutil {

// Dataset from explicit rows; ids are "u1", "u2", ...
inline Dataset make_dataset(const std::vector<std::vector<double>>& x,
                            const std::vector<int>& z, const std::vector<double>& y) {
  Dataset ds;
  const std::size_t n = x.size();
  const std::size_t p = x.front().size();
  ds.x = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < p; ++k) ds.x(i, k) = x[i][k];
  ds.z = z;
  ds.y = y;
  for (std::size_t i = 0; i < n; ++i) ds.ids.push_back("u" + std::to_string(i + 1));
  for (std::size_t k = 0; k < p; ++k) ds.column_names.push_back("x" + std::to_string(k + 1));
  ds.validate();
  return ds;
}

// 1D dataset from treated/control positions (outcomes default to zero).
inline Dataset make_1d(const std::vector<double>& treated,
                       const std::vector<double>& controls,
                       std::vector<double> y_treated = {},
                       std::vector<double> y_controls = {}) {
  std::vector<std::vector<double>> x;
  std::vector<int> z;
  std::vector<double> y;
  for (std::size_t i = 0; i < treated.size(); ++i) {
    x.push_back({treated[i]});
    z.push_back(1);
    y.push_back(y_treated.empty() ? 0.0 : y_treated[i]);
  }
  for (std::size_t i = 0; i < controls.size(); ++i) {
    x.push_back({controls[i]});
    z.push_back(0);
    y.push_back(y_controls.empty() ? 0.0 : y_controls[i]);
  }
  return make_dataset(x, z, y);
}

struct RandomInstance {
  Dataset ds;
  CaliperSpec spec;
};

// Random matching instance where at least one treated unit is feasible:
// controls fill the cube, treated units are jittered copies of controls.
inline RandomInstance random_instance(Rng& rng, std::size_t max_p = 6,
                                      std::size_t max_n = 200,
                                      Norm norm = Norm::Linf) {
  const std::size_t p = 1 + rng.below(max_p);
  const std::size_t n_c = std::max<std::size_t>(4, rng.below(max_n / 2) + 4);
  const std::size_t n_t = std::max<std::size_t>(2, rng.below(max_n / 4) + 2);

  std::vector<std::vector<double>> x;
  std::vector<int> z;
  std::vector<double> y;
  for (std::size_t j = 0; j < n_c; ++j) {
    std::vector<double> row(p);
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
    x.push_back(row);
    z.push_back(0);
    y.push_back(rng.normal());
  }
  for (std::size_t t = 0; t < n_t; ++t) {
    std::vector<double> row = x[rng.below(n_c)];
    for (auto& v : row) v += 0.05 * rng.normal();
    x.push_back(row);
    z.push_back(1);
    y.push_back(rng.normal());
  }

  RandomInstance inst;
  inst.ds = make_dataset(x, z, y);
  inst.spec.pi.resize(p);
  for (auto& pi : inst.spec.pi) pi = rng.uniform(0.2, 2.0);
  inst.spec.c = rng.uniform(0.5, 1.5);
  inst.spec.norm = norm;
  inst.spec.policy = CaliperPolicy::Fixed;
  inst.spec.validate();
  return inst;
}

// Convex weights over m points, sampled from a flat Dirichlet.
inline std::vector<double> random_simplex(Rng& rng, std::size_t m) {
  std::vector<double> w(m);
  double total = 0.0;
  for (auto& wi : w) {
    wi = -std::log(1.0 - rng.uniform01());
    total += wi;
  }
  for (auto& wi : w) wi /= total;
  return w;
}

}  // namespace csm::testutil
