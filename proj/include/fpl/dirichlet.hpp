#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/fields.hpp"
#include "fpl/geom.hpp"
#include "fpl/params.hpp"

namespace fpl {

/// Truncated lattice on [-L, L]^dim.  Interior nodes (the minimization
/// variables) are the central region |x_i| <= L/2; every other node belongs to
/// the collar carrying Dirichlet data, so the collar is at least L/2 wide in
/// each direction.
struct Grid {
  int dim = 1;
  double extent = 1.0;   // L
  double spacing = 0.0;  // h
  std::vector<Vec> nodes;
  std::vector<bool> interior;
  std::vector<int> interior_idx, collar_idx;

  static Grid make(int dim, int nodes_per_side, double extent) {
    if (dim != 1 && dim != 2) throw DomainError("Grid: dim must be 1 or 2");
    if (nodes_per_side < 4) throw DomainError("Grid: too few nodes");
    Grid g;
    g.dim = dim;
    g.extent = extent;
    g.spacing = 2.0 * extent / (nodes_per_side - 1);
    auto coord = [&](int i) { return -extent + i * g.spacing; };
    if (dim == 1) {
      for (int i = 0; i < nodes_per_side; ++i) g.nodes.push_back(Vec{coord(i)});
    } else {
      for (int i = 0; i < nodes_per_side; ++i)
        for (int j = 0; j < nodes_per_side; ++j)
          g.nodes.push_back(Vec{coord(i), coord(j)});
    }
    const double half = 0.5 * extent + 0.25 * g.spacing;
    for (std::size_t k = 0; k < g.nodes.size(); ++k) {
      bool in = true;
      for (int d = 0; d < dim; ++d)
        if (std::abs(g.nodes[k][d]) > half) in = false;
      g.interior.push_back(in);
      (in ? g.interior_idx : g.collar_idx).push_back(static_cast<int>(k));
    }
    return g;
  }

  std::size_t size() const { return nodes.size(); }
};

struct DiscreteField {
  std::vector<double> values;

  static DiscreteField constant(const Grid& g, double c) {
    return DiscreteField{std::vector<double>(g.size(), c)};
  }
};

struct SolveOptions {
  double tol = 1e-8;       // stopping threshold on the interior gradient norm
  int max_iters = 20000;
  double armijo_c = 1e-4;
  double shrink = 0.5;
};

namespace detail {

inline void check_grid_params(const Grid& g, const Params& prm) {
  if (g.dim != prm.n)
    throw DomainError("dirichlet: grid dimension must equal params.n");
}

inline double pair_weight(const Grid& g, int i, int j, const Params& prm) {
  double r = dist(g.nodes[i], g.nodes[j]);
  return std::pow(g.spacing, 2.0 * g.dim) *
         std::pow(r, -(g.dim + prm.sp()));
}

}  // namespace detail

/// Discrete Gagliardo p-energy over all node pairs:
///   E(u) = (1/2) sum_{i != j} h^{2n} |u_i - u_j|^p / |x_i - x_j|^{n+sp}.
/// Nonnegative, zero iff u is constant, strictly convex on the affine slice
/// fixing the collar (p > 1).
inline double discrete_energy(const DiscreteField& u, const Grid& g,
                              const Params& prm) {
  detail::check_grid_params(g, prm);
  const int N = static_cast<int>(g.size());
  const double p = prm.p;
  double e = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double du = u.values[i] - u.values[j];
      if (du == 0.0) continue;
      e += detail::pair_weight(g, i, j, prm) * std::pow(std::abs(du), p);
    }
  return e;  // the i<j sum already carries the 1/2 of the symmetric sum
}

/// Exact gradient of the discrete energy:
///   dE/du_i = p sum_{j != i} h^{2n} h(u_i - u_j) / |x_i - x_j|^{n+sp}.
inline DiscreteField energy_gradient(const DiscreteField& u, const Grid& g,
                                     const Params& prm) {
  detail::check_grid_params(g, prm);
  const int N = static_cast<int>(g.size());
  DiscreteField grad{std::vector<double>(g.size(), 0.0)};
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      double du = u.values[i] - u.values[j];
      if (du == 0.0) continue;
      double w = detail::pair_weight(g, i, j, prm) * prm.p *
                 h_kernel(du, prm.p);
      grad.values[i] += w;
      grad.values[j] -= w;
    }
  return grad;
}

struct SolveResult {
  DiscreteField u;
  int iters = 0;
  bool converged = false;
  double grad_norm = 0.0;
};

namespace detail {

inline double interior_grad_norm(const DiscreteField& grad, const Grid& g) {
  double s = 0;
  for (int i : g.interior_idx) s += grad.values[i] * grad.values[i];
  return std::sqrt(s);
}

}  // namespace detail

/// Minimizes the discrete energy over fields agreeing with g_data on the
/// collar: projected gradient descent on the interior coordinates with a
/// Barzilai-Borwein trial step safeguarded by Armijo backtracking.  Returns
/// the best iterate with converged = false when max_iters is hit.
inline SolveResult solve_dirichlet(const DiscreteField& g_data, const Grid& g,
                                   const Params& prm, const SolveOptions& opt,
                                   const DiscreteField* init = nullptr) {
  detail::check_grid_params(g, prm);
  DiscreteField u = init ? *init : g_data;
  if (u.values.size() != g.size())
    throw DomainError("solve_dirichlet: field size mismatch");
  for (int i : g.collar_idx) u.values[i] = g_data.values[i];
  if (!init) {
    double mean = 0;
    for (int i : g.collar_idx) mean += g_data.values[i];
    mean /= std::max<std::size_t>(1, g.collar_idx.size());
    for (int i : g.interior_idx) u.values[i] = mean;
  }

  double energy = discrete_energy(u, g, prm);
  DiscreteField grad = energy_gradient(u, g, prm);
  double gnorm = detail::interior_grad_norm(grad, g);
  double step = 1.0;
  std::vector<double> prev_u, prev_g;

  SolveResult res;
  for (int iter = 0; iter < opt.max_iters; ++iter) {
    if (gnorm <= opt.tol) {
      res.u = u;
      res.iters = iter;
      res.converged = true;
      res.grad_norm = gnorm;
      return res;
    }
    // BB1 trial step from the previous interior displacement
    if (!prev_u.empty()) {
      double sy = 0, ss = 0;
      for (std::size_t k = 0; k < g.interior_idx.size(); ++k) {
        int i = g.interior_idx[k];
        double sv = u.values[i] - prev_u[k];
        double yv = grad.values[i] - prev_g[k];
        sy += sv * yv;
        ss += sv * sv;
      }
      step = sy > 0 ? ss / sy : step * 2.0;
    }
    step = std::clamp(step, 1e-14, 1e14);

    prev_u.resize(g.interior_idx.size());
    prev_g.resize(g.interior_idx.size());
    for (std::size_t k = 0; k < g.interior_idx.size(); ++k) {
      prev_u[k] = u.values[g.interior_idx[k]];
      prev_g[k] = grad.values[g.interior_idx[k]];
    }

    // Armijo backtracking on the interior update
    double t = step;
    DiscreteField trial = u;
    double new_energy = energy;
    for (int bt = 0; bt < 60; ++bt) {
      for (int i : g.interior_idx)
        trial.values[i] = u.values[i] - t * grad.values[i];
      new_energy = discrete_energy(trial, g, prm);
      if (new_energy <= energy - opt.armijo_c * t * gnorm * gnorm) break;
      t *= opt.shrink;
    }
    u = trial;
    energy = new_energy;
    grad = energy_gradient(u, g, prm);
    gnorm = detail::interior_grad_norm(grad, g);
  }
  res.u = u;
  res.iters = opt.max_iters;
  res.converged = false;  // MaxItersExceeded, flagged rather than thrown
  res.grad_norm = gnorm;
  return res;
}

/// p = 2 fast path: the first-order conditions are linear, solved directly by
/// dense Cholesky.  Kept as a permanent oracle for the iterative solver.
inline DiscreteField solve_dirichlet_p2_direct(const DiscreteField& g_data,
                                               const Grid& g,
                                               const Params& prm) {
  detail::check_grid_params(g, prm);
  if (std::abs(prm.p - 2.0) > 1e-12)
    throw DomainError("solve_dirichlet_p2_direct: requires p = 2");
  const int m = static_cast<int>(g.interior_idx.size());
  std::vector<double> A(static_cast<std::size_t>(m) * m, 0.0);
  std::vector<double> b(m, 0.0);
  std::vector<int> pos(g.size(), -1);
  for (int k = 0; k < m; ++k) pos[g.interior_idx[k]] = k;

  for (int k = 0; k < m; ++k) {
    int i = g.interior_idx[k];
    double diag = 0.0;
    for (int j = 0; j < static_cast<int>(g.size()); ++j) {
      if (j == i) continue;
      double w = detail::pair_weight(g, i, j, prm);
      diag += w;
      if (pos[j] >= 0)
        A[static_cast<std::size_t>(k) * m + pos[j]] -= w;
      else
        b[k] += w * g_data.values[j];
    }
    A[static_cast<std::size_t>(k) * m + k] = diag;
  }

  // Cholesky A = L L^T
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = A[static_cast<std::size_t>(i) * m + j];
      for (int k = 0; k < j; ++k)
        s -= A[static_cast<std::size_t>(i) * m + k] *
             A[static_cast<std::size_t>(j) * m + k];
      if (i == j) {
        if (s <= 0) throw DomainError("p2 direct solve: matrix not SPD");
        A[static_cast<std::size_t>(i) * m + j] = std::sqrt(s);
      } else {
        A[static_cast<std::size_t>(i) * m + j] =
            s / A[static_cast<std::size_t>(j) * m + j];
      }
    }
  }
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k)
      s -= A[static_cast<std::size_t>(i) * m + k] * y[k];
    y[i] = s / A[static_cast<std::size_t>(i) * m + i];
  }
  std::vector<double> x(m);
  for (int i = m - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < m; ++k)
      s -= A[static_cast<std::size_t>(k) * m + i] * x[k];
    x[i] = s / A[static_cast<std::size_t>(i) * m + i];
  }

  DiscreteField u = g_data;
  for (int k = 0; k < m; ++k) u.values[g.interior_idx[k]] = x[k];
  return u;
}

struct ComparisonReport {
  bool ok = true;
  std::vector<int> violations;
  double min_gap = 0.0;  // min over interior of u1 - u2
};

/// Solves with ordered collar data g1 >= g2 and checks u1 >= u2 - 1e-8 at
/// every interior node.
inline ComparisonReport comparison_test(const DiscreteField& g1,
                                        const DiscreteField& g2, const Grid& g,
                                        const Params& prm,
                                        const SolveOptions& opt) {
  for (int i : g.collar_idx)
    if (g1.values[i] < g2.values[i])
      throw DomainError("comparison_test: needs g1 >= g2 on the collar");
  DiscreteField u1 = solve_dirichlet(g1, g, prm, opt).u;
  DiscreteField u2 = solve_dirichlet(g2, g, prm, opt).u;
  ComparisonReport rep;
  rep.min_gap = 1e300;
  for (int i : g.interior_idx) {
    double gap = u1.values[i] - u2.values[i];
    rep.min_gap = std::min(rep.min_gap, gap);
    if (gap < -1e-8) {
      rep.ok = false;
      rep.violations.push_back(i);
    }
  }
  return rep;
}

/// Minimum node value over the annulus r <= |x| < 2r.
inline double annulus_essinf(const DiscreteField& u, const Grid& g, double r) {
  double m = 1e300;
  bool found = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double rad = g.nodes[k].norm();
    if (rad >= r && rad < 2.0 * r) {
      m = std::min(m, u.values[k]);
      found = true;
    }
  }
  if (!found) throw EmptyRegion("annulus_essinf: no nodes in the annulus");
  return m;
}

/// Diagnostic ratio (avg_B u^t)^{1/t} / min_{2B} u for nonnegative u.
inline double weak_harnack_ratio(const DiscreteField& u, const Grid& g,
                                 const Params& prm, double t,
                                 const Vec& center, double r) {
  if (prm.sp() < prm.n) {
    double tbar = prm.n * (prm.p - 1.0) / (prm.n - prm.sp());
    if (!(t < tbar))
      throw DomainError("weak_harnack_ratio: t must be below n(p-1)/(n-sp)");
  }
  double sum = 0.0;
  int count = 0;
  double minv = 1e300;
  bool small_found = false, big_found = false;
  for (std::size_t k = 0; k < g.size(); ++k) {
    double d = dist(g.nodes[k], center);
    if (u.values[k] < 0)
      throw DomainError("weak_harnack_ratio: u must be nonnegative");
    if (d < r) {
      sum += std::pow(u.values[k], t);
      ++count;
      small_found = true;
    }
    if (d < 2.0 * r) {
      minv = std::min(minv, u.values[k]);
      big_found = true;
    }
  }
  if (!small_found || !big_found)
    throw EmptyRegion("weak_harnack_ratio: balls contain no nodes");
  if (!(minv > 0)) throw ZeroInfimum("weak_harnack_ratio: zero infimum");
  return std::pow(sum / count, 1.0 / t) / minv;
}

}  // namespace fpl
