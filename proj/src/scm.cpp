#include "csm/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "csm/distance.hpp"
#include "csm/simplex.hpp"

namespace csm {

const char* to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::Scm: return "SCM";
    case WeightScheme::Uniform: return "UNIFORM";
    case WeightScheme::OneNn: return "ONE_NN";
  }
  return "?";
}

namespace {

// Clamp negatives, renormalize: the simplex constraint holds exactly on the
// returned weights.
void renormalize(std::vector<double>& w) {
  double total = 0.0;
  for (double& wi : w) {
    if (wi < 0.0 || !std::isfinite(wi)) wi = 0.0;
    total += wi;
  }
  if (total <= 0.0) {
    w.assign(w.size(), 1.0 / static_cast<double>(w.size()));
    return;
  }
  for (double& wi : w) wi /= total;
}

double recomputed_imbalance(std::span<const double> x_t, const Matrix& controls,
                            std::span<const double> w, const ScalingMatrix& v,
                            Norm norm) {
  const std::size_t p = controls.cols();
  std::vector<double> synth(p, 0.0);
  for (std::size_t j = 0; j < controls.rows(); ++j) {
    if (w[j] == 0.0) continue;
    for (std::size_t k = 0; k < p; ++k) synth[k] += w[j] * controls(j, k);
  }
  return scaled_distance(x_t, synth, v, norm);
}

// Exact covariate matches are trivially optimal; taking them (split over
// ties) keeps the solution deterministic instead of leaving the choice to
// solver pivoting among degenerate optima.
bool exact_match_shortcut(std::span<const double> x_t, const Matrix& controls,
                          ScmSolution& sol) {
  const std::size_t m = controls.rows();
  std::vector<std::size_t> exact;
  for (std::size_t j = 0; j < m; ++j) {
    bool equal = true;
    for (std::size_t k = 0; k < controls.cols() && equal; ++k)
      equal = controls(j, k) == x_t[k];
    if (equal) exact.push_back(j);
  }
  if (exact.empty()) return false;
  sol.weights.assign(m, 0.0);
  for (std::size_t j : exact) sol.weights[j] = 1.0 / static_cast<double>(exact.size());
  sol.imbalance = 0.0;
  return true;
}

}  // namespace

ScmSolution scm_weights_linf(std::span<const double> x_t, const Matrix& controls,
                             const ScalingMatrix& v, double tol) {
  const std::size_t m = controls.rows();
  const std::size_t p = controls.cols();
  if (m == 0) fail(ErrorCode::EmptySubset, "scm_weights_linf: no controls");
  if (x_t.size() != p || v.p() != p)
    fail(ErrorCode::DimensionMismatch, "scm_weights_linf: dimensions disagree");

  ScmSolution sol;
  if (exact_match_shortcut(x_t, controls, sol)) return sol;
  if (m == 1) {
    sol.weights = {1.0};
    sol.imbalance = scaled_distance(x_t, controls.row(0), v, Norm::Linf);
    return sol;
  }

  // Variables: w_1..w_m, y, s1_1..s1_p, s2_1..s2_p.
  //   sum_j w_j a_jk + y - s1_k = b_k      (b_k - sum w a <= y)
  //   sum_j w_j a_jk - y + s2_k = b_k      (sum w a - b_k <= y)
  //   sum_j w_j = 1
  // with a_jk = V_k X_jk, b_k = V_k x_tk; minimize y.
  const std::size_t n_vars = m + 1 + 2 * p;
  const std::size_t n_rows = 2 * p + 1;
  lp::Problem problem;
  problem.a = Matrix(n_rows, n_vars);
  problem.b.assign(n_rows, 0.0);
  problem.c.assign(n_vars, 0.0);
  problem.c[m] = 1.0;  // minimize y

  for (std::size_t k = 0; k < p; ++k) {
    const double bk = v.v_diag[k] * x_t[k];
    for (std::size_t j = 0; j < m; ++j) {
      const double ajk = v.v_diag[k] * controls(j, k);
      problem.a(k, j) = ajk;
      problem.a(p + k, j) = ajk;
    }
    problem.a(k, m) = 1.0;
    problem.a(k, m + 1 + k) = -1.0;
    problem.b[k] = bk;
    problem.a(p + k, m) = -1.0;
    problem.a(p + k, m + 1 + p + k) = 1.0;
    problem.b[p + k] = bk;
  }
  for (std::size_t j = 0; j < m; ++j) problem.a(2 * p, j) = 1.0;
  problem.b[2 * p] = 1.0;

  const auto lp_sol = lp::solve(problem);
  if (lp_sol.status != lp::Status::Optimal)
    fail(ErrorCode::SolverFailure, "synthetic-control LP did not reach an optimum");

  sol.weights.assign(lp_sol.x.begin(), lp_sol.x.begin() + static_cast<long>(m));
  renormalize(sol.weights);
  sol.imbalance = recomputed_imbalance(x_t, controls, sol.weights, v, Norm::Linf);
  sol.iterations = lp_sol.iterations;
  (void)tol;
  return sol;
}

namespace {

// Equality-constrained least squares over the active set: minimize
// ||b - sum_i v_i a_i|| subject to sum_i v_i = 1, signs free. Parameterized
// as v = e_1 + sum u_i (e_{i+1} - e_1) and solved by QR with column pivoting
// (rank-deficient safe).
std::vector<double> affine_minimizer(const std::vector<std::vector<double>>& pts,
                                     const std::vector<double>& target) {
  const std::size_t s = pts.size();
  const std::size_t p = target.size();
  if (s == 1) return {1.0};

  const std::size_t cols = s - 1;
  // B column i = pts[i+1] - pts[0]; rhs = target - pts[0].
  std::vector<std::vector<double>> b_mat(p, std::vector<double>(cols));
  std::vector<double> rhs(p);
  for (std::size_t r = 0; r < p; ++r) {
    rhs[r] = target[r] - pts[0][r];
    for (std::size_t c = 0; c < cols; ++c) b_mat[r][c] = pts[c + 1][r] - pts[0][r];
  }

  // Householder QR with column pivoting.
  std::vector<std::size_t> perm(cols);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> col_norms(cols, 0.0);
  for (std::size_t c = 0; c < cols; ++c)
    for (std::size_t r = 0; r < p; ++r) col_norms[c] += b_mat[r][c] * b_mat[r][c];

  const std::size_t max_rank = std::min(p, cols);
  std::size_t rank = 0;
  double frob = 0.0;
  for (double nc : col_norms) frob = std::max(frob, nc);
  const double rank_tol = std::max(frob, 1.0) * 1e-26;

  for (std::size_t step = 0; step < max_rank; ++step) {
    // Pivot the largest remaining column into position.
    std::size_t best = step;
    double best_norm = 0.0;
    for (std::size_t c = step; c < cols; ++c) {
      double nc = 0.0;
      for (std::size_t r = step; r < p; ++r) nc += b_mat[r][c] * b_mat[r][c];
      if (nc > best_norm) {
        best_norm = nc;
        best = c;
      }
    }
    if (best_norm <= rank_tol) break;
    if (best != step) {
      for (std::size_t r = 0; r < p; ++r) std::swap(b_mat[r][best], b_mat[r][step]);
      std::swap(perm[best], perm[step]);
    }
    // Householder vector for column `step`.
    double alpha = std::sqrt(best_norm);
    if (b_mat[step][step] > 0.0) alpha = -alpha;
    std::vector<double> house(p, 0.0);
    house[step] = b_mat[step][step] - alpha;
    for (std::size_t r = step + 1; r < p; ++r) house[r] = b_mat[r][step];
    double hnorm2 = 0.0;
    for (std::size_t r = step; r < p; ++r) hnorm2 += house[r] * house[r];
    if (hnorm2 <= 0.0) break;

    auto apply = [&](std::vector<double>& vec) {
      double dot = 0.0;
      for (std::size_t r = step; r < p; ++r) dot += house[r] * vec[r];
      const double scale = 2.0 * dot / hnorm2;
      for (std::size_t r = step; r < p; ++r) vec[r] -= scale * house[r];
    };
    for (std::size_t c = step; c < cols; ++c) {
      std::vector<double> column(p);
      for (std::size_t r = 0; r < p; ++r) column[r] = b_mat[r][c];
      apply(column);
      for (std::size_t r = 0; r < p; ++r) b_mat[r][c] = column[r];
    }
    apply(rhs);
    b_mat[step][step] = alpha;
    ++rank;
  }

  // Back-substitute the rank x rank triangle; free variables stay zero.
  std::vector<double> u(cols, 0.0);
  for (std::size_t ii = rank; ii-- > 0;) {
    double acc = rhs[ii];
    for (std::size_t c = ii + 1; c < rank; ++c) acc -= b_mat[ii][c] * u[perm[c]];
    u[perm[ii]] = acc / b_mat[ii][ii];
  }

  std::vector<double> v_out(s, 0.0);
  double u_sum = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    v_out[c + 1] = u[c];
    u_sum += u[c];
  }
  v_out[0] = 1.0 - u_sum;
  return v_out;
}

}  // namespace

ScmSolution scm_weights_l2(std::span<const double> x_t, const Matrix& controls,
                           const ScalingMatrix& v, double tol, int max_iterations) {
  const std::size_t m = controls.rows();
  const std::size_t p = controls.cols();
  if (m == 0) fail(ErrorCode::EmptySubset, "scm_weights_l2: no controls");
  if (x_t.size() != p || v.p() != p)
    fail(ErrorCode::DimensionMismatch, "scm_weights_l2: dimensions disagree");

  ScmSolution sol;
  if (exact_match_shortcut(x_t, controls, sol)) return sol;
  if (m == 1) {
    sol.weights = {1.0};
    sol.imbalance = scaled_distance(x_t, controls.row(0), v, Norm::L2);
    return sol;
  }

  // Work in the scaled space: points a_j = V X_j, target b = V x_t.
  std::vector<std::vector<double>> points(m, std::vector<double>(p));
  std::vector<double> target(p);
  double scale2 = 1.0;
  for (std::size_t k = 0; k < p; ++k) {
    target[k] = v.v_diag[k] * x_t[k];
    scale2 += target[k] * target[k];
  }
  for (std::size_t j = 0; j < m; ++j) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      points[j][k] = v.v_diag[k] * controls(j, k);
      norm2 += points[j][k] * points[j][k];
    }
    scale2 = std::max(scale2, 1.0 + norm2);
  }

  auto objective_residual = [&](const std::vector<double>& w, std::vector<double>& resid) {
    resid.assign(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) resid[k] = target[k];
    for (std::size_t j = 0; j < m; ++j) {
      if (w[j] == 0.0) continue;
      for (std::size_t k = 0; k < p; ++k) resid[k] -= w[j] * points[j][k];
    }
  };

  // Start from the best single vertex.
  std::size_t best_vertex = 0;
  double best_dist = -1.0;
  for (std::size_t j = 0; j < m; ++j) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const double diff = target[k] - points[j][k];
      d2 += diff * diff;
    }
    if (best_dist < 0.0 || d2 < best_dist) {
      best_dist = d2;
      best_vertex = j;
    }
  }

  std::vector<double> w(m, 0.0);
  w[best_vertex] = 1.0;
  std::vector<std::size_t> active = {best_vertex};

  const double gap_floor = 16.0 * 2.220446049250313e-16 * scale2;
  const double stop_gap = std::max(tol * tol, gap_floor);

  std::vector<double> resid, grad(m);
  int iter = 0;
  bool converged = false;
  while (iter < max_iterations) {
    ++iter;
    objective_residual(w, resid);
    // grad_j = -2 a_j . resid
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < p; ++k) dot += points[j][k] * resid[k];
      grad[j] = -2.0 * dot;
    }
    std::size_t entering = 0;
    double min_grad = grad[0];
    for (std::size_t j = 1; j < m; ++j) {
      if (grad[j] < min_grad) {
        min_grad = grad[j];
        entering = j;
      }
    }
    double gw = 0.0;
    for (std::size_t j = 0; j < m; ++j) gw += grad[j] * w[j];
    const double gap = gw - min_grad;
    if (gap <= stop_gap) {
      converged = true;
      break;
    }
    if (std::find(active.begin(), active.end(), entering) == active.end())
      active.push_back(entering);

    // Fully-corrective step: minimize over conv(active) by repeated affine
    // solves, stepping to the boundary and dropping vertices as needed.
    for (int inner = 0; inner < static_cast<int>(m) + 8; ++inner) {
      std::vector<std::vector<double>> pts;
      pts.reserve(active.size());
      for (std::size_t idx : active) pts.push_back(points[idx]);
      const auto v_aff = affine_minimizer(pts, target);

      const double feas_tol = -1e-14;
      bool feasible = true;
      for (double vi : v_aff)
        if (vi < feas_tol) feasible = false;

      if (feasible) {
        std::vector<double> w_new(m, 0.0);
        for (std::size_t i = 0; i < active.size(); ++i)
          w_new[active[i]] = std::max(v_aff[i], 0.0);
        w.swap(w_new);
        break;
      }
      // Step from w toward v_aff until the first coordinate hits zero.
      double theta = 1.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double wi = w[active[i]];
        const double vi = v_aff[i];
        if (vi < wi) {
          const double step_limit = wi / (wi - vi);
          theta = std::min(theta, step_limit);
        }
      }
      std::vector<double> w_next(m, 0.0);
      std::vector<std::size_t> next_active;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double wi = w[active[i]];
        const double vi = v_aff[i];
        double nw = wi + theta * (vi - wi);
        if (nw < 1e-15) nw = 0.0;
        if (nw > 0.0) next_active.push_back(active[i]);
        w_next[active[i]] = nw;
      }
      w.swap(w_next);
      if (next_active.size() == active.size()) {
        active.swap(next_active);
        break;  // no vertex dropped; accept and re-check the gap
      }
      active.swap(next_active);
      if (active.empty()) {  // numerically degenerate; restart from a vertex
        active = {entering};
        w.assign(m, 0.0);
        w[entering] = 1.0;
        break;
      }
    }
  }

  if (!converged && iter >= max_iterations)
    fail(ErrorCode::SolverFailure,
         "synthetic-control QP exceeded its iteration budget (" +
             std::to_string(max_iterations) + ")");

  sol.weights = w;
  renormalize(sol.weights);
  sol.imbalance = recomputed_imbalance(x_t, controls, sol.weights, v, Norm::L2);
  sol.iterations = iter;
  return sol;
}

const UnitWeights* WeightSet::find(int treated_row) const {
  for (const auto& unit : units)
    if (unit.treated_row == treated_row && !unit.skipped) return &unit;
  return nullptr;
}

WeightSet assign_weights(const MatchResult& mr, const Dataset& ds,
                         const CaliperSpec& spec, WeightScheme scheme, double tol,
                         int threads, std::optional<Norm> scm_norm) {
  if (spec.pi.size() != ds.p())
    fail(ErrorCode::DimensionMismatch, "caliper spec does not match dataset width");
  const ScalingMatrix v = scaling_matrix(spec);
  const Norm weight_norm = scm_norm.value_or(spec.norm);

  WeightSet ws;
  ws.scheme = scheme;
  ws.units.resize(mr.units.size());

  auto solve_unit = [&](std::size_t i) {
    const auto& match = mr.units[i];
    auto& unit = ws.units[i];
    unit.treated_row = match.treated_row;
    if (match.matched.empty()) {
      unit.skipped = true;
      return;
    }
    const std::size_t m = match.matched.size();
    const auto x_t = ds.x.row(static_cast<std::size_t>(match.treated_row));

    std::vector<double> w;
    switch (scheme) {
      case WeightScheme::Uniform:
        w.assign(m, 1.0 / static_cast<double>(m));
        break;
      case WeightScheme::OneNn: {
        double dmin = match.matched[0].distance;
        for (const auto& mc : match.matched) dmin = std::min(dmin, mc.distance);
        std::size_t ties = 0;
        for (const auto& mc : match.matched) ties += mc.distance == dmin ? 1 : 0;
        w.assign(m, 0.0);
        for (std::size_t j = 0; j < m; ++j)
          if (match.matched[j].distance == dmin) w[j] = 1.0 / static_cast<double>(ties);
        break;
      }
      case WeightScheme::Scm: {
        Matrix controls(m, ds.p());
        for (std::size_t j = 0; j < m; ++j) {
          const auto row = ds.x.row(static_cast<std::size_t>(match.matched[j].control_row));
          for (std::size_t k = 0; k < ds.p(); ++k) controls(j, k) = row[k];
        }
        const auto sol = weight_norm == Norm::Linf
                             ? scm_weights_linf(x_t, controls, v, tol)
                             : scm_weights_l2(x_t, controls, v, tol);
        w = sol.weights;
        break;
      }
    }

    unit.weights.reserve(m);
    std::vector<double> synth(ds.p(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      unit.weights.emplace_back(match.matched[j].control_row, w[j]);
      const auto row = ds.x.row(static_cast<std::size_t>(match.matched[j].control_row));
      for (std::size_t k = 0; k < ds.p(); ++k) synth[k] += w[j] * row[k];
    }
    unit.imbalance = scaled_distance(x_t, synth, v, weight_norm);
  };

  const std::size_t n_units = ws.units.size();
  if (threads <= 1 || n_units < 2) {
    for (std::size_t i = 0; i < n_units; ++i) solve_unit(i);
    return ws;
  }
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n_units);
  const std::size_t chunk = (n_units + n_workers - 1) / n_workers;
  std::vector<std::thread> workers;
  for (std::size_t wi = 0; wi < n_workers; ++wi) {
    const std::size_t begin = wi * chunk;
    const std::size_t end = std::min(begin + chunk, n_units);
    if (begin >= end) break;
    workers.emplace_back([&, begin, end] {
      for (std::size_t i = begin; i < end; ++i) solve_unit(i);
    });
  }
  for (auto& worker : workers) worker.join();
  return ws;
}

}  // namespace csm
