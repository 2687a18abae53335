#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "fpl/errors.hpp"
#include "fpl/fields.hpp"
#include "fpl/geom.hpp"
#include "fpl/mc.hpp"
#include "fpl/params.hpp"
#include "fpl/profiles.hpp"
#include "fpl/quad.hpp"

namespace fpl {

struct PvRequest {
  ScalarField field;
  Vec point;
  Params params;
  QuadSpec spec;
};

namespace detail {

inline void check_pv_preconditions(const ScalarField& u, const Params& prm) {
  double reg = (1.0 - prm.s) * prm.p + u.holder_exponent;
  if (!(reg > 1.0))
    throw RegularityError(
        "pv: field regularity too low, needs (1-s)p + sigma > 1");
  if (!((prm.p - 1.0) * u.tail.exponent < prm.sp()))
    throw DivergenceError("pv: tail growth violates (p-1)*gamma < sp");
}

inline QuadSpec inner_spec(const QuadSpec& spec) {
  QuadSpec in = spec;
  in.rel_tol = std::max(1e-12, 0.1 * spec.rel_tol);
  in.abs_tol = std::min(spec.abs_tol, 1e-13);
  return in;
}

}  // namespace detail

/// Pointwise principal value of the nonlocal p-Laplace operator,
///   p.v. \int h(u(x)-u(y)) |x-y|^{-n-sp} dy,
/// realized by symmetrization: inside the near ball |y-x| < eta the odd
/// first-order term h((x-y).grad u(x)) integrates to zero, so the integrand is
/// replaced by the absolutely integrable difference
///   [h(u(x)-u(y)) - h((x-y).grad u(x))] |x-y|^{-n-sp};
/// outside the ball the integrand is used directly.  No cutoff extrapolation
/// is involved.  Estimated by importance-sampled Monte Carlo.
inline Estimate pv_apply(const PvRequest& req) {
  const ScalarField& u = req.field;
  const Params& prm = req.params;
  const int n = u.dim;
  const double sp = prm.sp(), p = prm.p;
  detail::check_pv_preconditions(u, prm);

  const Vec x = req.point;
  const double delta0 = u.smoothness_radius(x);
  if (delta0 <= 0.0)
    throw SingularityError("pv_apply: evaluation point is singular");
  // near/far split radius: a quarter of the smoothness radius, capped at 1
  // (for origin-singular profiles delta0 <= |x| already keeps the origin out)
  const double eta = std::min(0.25 * delta0, 1.0);

  const double ux = u.evaluate(x);
  const Vec grad = u.gradient(x);

  auto integrand = [&u, x, ux, grad, n, sp, p, eta](const Vec& y) {
    Vec d = x - y;
    double r = d.norm();
    if (r == 0.0) return 0.0;
    double kern = std::pow(r, -n - sp);
    double uy = u.evaluate(y);
    if (!std::isfinite(uy)) return 0.0;  // exact singular hit, measure zero
    if (r < eta)
      return (h_kernel(ux - uy, p) - h_kernel(dot(d, grad), p)) * kern;
    return h_kernel(ux - uy, p) * kern;
  };

  PointSampler sampler(n);
  double a_near =
      std::clamp((1.0 - prm.s) * p + u.holder_exponent - 1.0, 0.05,
                 static_cast<double>(n));
  sampler.add(Component::power_ball(x, a_near, eta), 0.3);
  double rmid = std::max(2.0, 2.0 * x.norm());
  for (const auto& sgp : u.singular_points)
    rmid = std::max(rmid, 2.0 * dist(x, sgp.location));
  sampler.add(Component::uniform_ball(x, rmid), 0.2);
  double b_far = sp - (p - 1.0) * std::max(u.tail.exponent, 0.0);
  sampler.add(Component::pareto_shell(x, b_far, eta), 0.25);
  for (const auto& sgp : u.singular_points) {
    double a = std::clamp(n + sgp.value_exponent * (p - 1.0), 0.05,
                          static_cast<double>(n));
    sampler.add(Component::power_ball(sgp.location, a, 1.0),
                0.25 / u.singular_points.size());
  }
  sampler.normalize();

  return mc_integrate(sampler, integrand, req.spec);
}

/// Radial fast path.  With v the profile and K the angular kernel, the polar
/// representation of the principal value at radius r folds the exterior
/// rho > 1 onto t = 1/rho in (0,1), where |e1 - t^{-1}theta| = t^{-1}|e1 -
/// t theta| pairs the two sides of the sphere.  The folded integrand
///   W(t) = t^{sp-1} h(v(r) - v(r/t)) + t^{n-1} h(v(r) - v(r t))
/// is absolutely integrable on (0,1): the two terms cancel to order
/// (1-t)^p against the kernel blowup (1-t)^{-1-sp}.  The result carries the
/// r^{-sp} scaling factor of the change of variables.
inline Estimate pv_apply_radial(const RadialProfile& prof, double r,
                                const Params& prm, const QuadSpec& spec) {
  const int n = prm.n;
  const double sp = prm.sp(), p = prm.p;
  if (r < 0) throw DomainError("pv_apply_radial: r must be >= 0");
  if (!((p - 1.0) * prof.decay_exponent < sp))
    throw DivergenceError("pv_apply_radial: (p-1)*gamma >= sp");

  const QuadSpec in = detail::inner_spec(spec);
  long inner_evals = 0;

  if (r == 0.0) {
    if (prof.singular_at_origin)
      throw SingularityError("pv_apply_radial: profile singular at r = 0");
    double v0 = prof.value(0.0);
    double omega = unit_sphere_measure(n);
    auto f = [&prof, v0, p, sp, n](double rho) {
      return h_kernel(v0 - prof.value(rho), p) * std::pow(rho, n - 1.0) *
             std::pow(rho, -n - sp);
    };
    Estimate e = integrate_1d(f, 0.0, std::numeric_limits<double>::infinity(),
                              true, true, spec);
    e.value *= omega;
    e.error *= omega;
    return e;
  }

  auto kernel = [&](double t) {
    Estimate k = angular_kernel(t, n + sp, n, in);
    inner_evals += k.evals;
    return k.value;
  };
  auto folded = [&](double t) {
    double w = std::pow(t, sp - 1.0) * h_kernel(prof.value(r) - prof.value(r / t), p) +
               std::pow(t, n - 1.0) * h_kernel(prof.value(r) - prof.value(r * t), p);
    if (w == 0.0) return 0.0;
    return w * kernel(t);
  };
  Estimate e = integrate_1d(folded, 0.0, 1.0, true, true, spec);
  double scale = std::pow(r, -sp);
  Estimate out;
  out.value = scale * e.value;
  out.error = scale * e.error + in.rel_tol * std::abs(scale * e.value);
  out.evals = e.evals + inner_evals;
  out.method = Method::adaptive;
  return out;
}

namespace detail {

// Angular kernel restricted to the window c_lo <= |e1 - rho theta| <= c_hi.
// |e1 - rho theta|^2 = 1 - 2 rho cos(psi) + rho^2 is increasing in psi, so the
// window is an interval in the polar angle with closed-form ends.
inline double windowed_kernel(double rho, double alpha, int n, double c_lo,
                              double c_hi, const QuadSpec& spec,
                              long& inner_evals) {
  if (rho == 0.0) {
    double v = (1.0 >= c_lo && 1.0 <= c_hi) ? unit_sphere_measure(n) : 0.0;
    return v;
  }
  if (n == 1) {
    double sum = 0.0;
    for (double th : {1.0, -1.0}) {
      double q = std::abs(1.0 - rho * th);
      if (q >= c_lo && q <= c_hi) sum += std::pow(q, -alpha);
    }
    return sum;
  }
  auto cos_at = [rho](double c) { return (1.0 + rho * rho - c * c) / (2.0 * rho); };
  double lo2 = (1.0 - rho) * (1.0 - rho), hi2 = (1.0 + rho) * (1.0 + rho);
  double psi_lo = lo2 >= c_lo * c_lo ? 0.0 : std::acos(std::clamp(cos_at(c_lo), -1.0, 1.0));
  double psi_hi = hi2 <= c_hi * c_hi ? M_PI : std::acos(std::clamp(cos_at(c_hi), -1.0, 1.0));
  if (psi_lo >= psi_hi) return 0.0;
  auto f = [rho, alpha, n](double psi) {
    double sh = std::sin(0.5 * psi);
    double q = (1.0 - rho) * (1.0 - rho) + 4.0 * rho * sh * sh;
    double v = std::pow(q, -0.5 * alpha);
    if (n > 2) v *= std::pow(std::sin(psi), n - 2);
    return v;
  };
  Estimate e = integrate_1d(f, psi_lo, psi_hi, false, false, spec);
  inner_evals += e.evals;
  return unit_sphere_measure(n - 1) * e.value;
}

}  // namespace detail

/// G(r): the principal value of the operator applied to the unit-rescaled
/// perturbed profile, evaluated on the unit sphere.  Computed by a three-region
/// decomposition around the evaluation point:
///   near ball |e1 - z| < 1/2   -- symmetrized (gradient term subtracted),
///   middle 1/2 <= |e1-z| <= 2  -- direct, windowed angular kernel,
///   far |e1 - z| > 2           -- direct, windowed angular kernel.
/// This is an independent route from pv_apply_radial's folded representation;
/// the identity (-Delta)^s_p f(x) = r^{sigma-n} G(r) at |x| = r ties the two.
inline Estimate g_of_r(const Params& prm, double sigma, double r,
                       const QuadSpec& spec) {
  if (!(prm.sp() < prm.n)) throw RegimeError("g_of_r: requires sp < n");
  if (!(r > 0)) throw DomainError("g_of_r: requires r > 0");
  const int n = prm.n;
  const double sp = prm.sp(), p = prm.p, alpha = n + sp;
  RadialProfile prof = scaled_perturbed(prm, sigma, r);
  const double v1 = prof.value(1.0);
  const double dv1 = prof.deriv(1.0);

  const QuadSpec in = detail::inner_spec(spec);
  long inner_evals = 0;

  // near region: |e1 - z| < 1/2, z = e1 + rho * theta
  auto near_angular = [&](double rho) {
    if (n == 1) {
      double sum = 0.0;
      for (double th : {1.0, -1.0}) {
        double rad = std::abs(1.0 + rho * th);
        sum += h_kernel(v1 - prof.value(rad), p) -
               h_kernel(-rho * th * dv1, p);
      }
      return sum;
    }
    auto f = [&](double psi) {
      double cp = std::cos(psi);
      double rad = std::sqrt(1.0 + 2.0 * rho * cp + rho * rho);
      double v = h_kernel(v1 - prof.value(rad), p) -
                 h_kernel(-rho * cp * dv1, p);
      if (n > 2) v *= std::pow(std::sin(psi), n - 2);
      return v;
    };
    Estimate e = integrate_1d(f, 0.0, M_PI, false, false, in);
    inner_evals += e.evals;
    return unit_sphere_measure(n - 1) * e.value;
  };
  auto near_f = [&](double rho) {
    return std::pow(rho, -1.0 - sp) * near_angular(rho);
  };
  Estimate e_near = integrate_1d(near_f, 0.0, 0.5, true, false, spec);

  // middle and far regions in polar coordinates around the origin, where the
  // profile's small-|z| spike (scale 1/r) sits at the endpoint rho = 0
  auto direct_f = [&](double c_lo, double c_hi) {
    return [&, c_lo, c_hi](double rho) {
      double w = h_kernel(v1 - prof.value(rho), p);
      if (w == 0.0) return 0.0;
      double kw =
          detail::windowed_kernel(rho, alpha, n, c_lo, c_hi, in, inner_evals);
      if (kw == 0.0) return 0.0;
      return std::pow(rho, n - 1.0) * w * kw;
    };
  };
  auto mid = direct_f(0.5, 2.0);
  Estimate e_mid{0, 0, 0, Method::adaptive};
  for (auto [a, b] : {std::pair{0.0, 0.5}, std::pair{0.5, 1.0},
                      std::pair{1.0, 1.5}, std::pair{1.5, 3.0}}) {
    Estimate piece = integrate_1d(mid, a, b, a == 0.0, false, spec);
    e_mid = combine_sum(e_mid, piece);
  }
  auto far = direct_f(2.0, std::numeric_limits<double>::infinity());
  Estimate e_far = integrate_1d(far, 1.0, 3.0, false, false, spec);
  e_far = combine_sum(
      e_far, integrate_1d(far, 3.0, std::numeric_limits<double>::infinity(),
                          false, true, spec));

  Estimate out = combine_sum(combine_sum(e_near, e_mid), e_far);
  out.error += in.rel_tol * std::abs(out.value);
  out.evals += inner_evals;
  return out;
}

/// The r -> infinity limit of G(r):
///   p.v. \int h(1 - |z|^{(sp-n+sigma)/(p-1)}) |e1 - z|^{-n-sp} dz,
/// evaluated through the fold onto t in (0,1), where the combined integrand
///   t^{n-1} (t^{-sigma} - 1) (t^c - 1)^{p-1} K(t),  c = (sp-n+sigma)/(p-1),
/// is nonnegative.  A positive finite number for every feasible sigma.
inline Estimate g_limit(const Params& prm, double sigma,
                        const QuadSpec& spec) {
  if (!(prm.sp() < prm.n)) throw RegimeError("g_limit: requires sp < n");
  const int n = prm.n;
  const double sp = prm.sp(), p = prm.p;
  const double c = (sp - prm.n + sigma) / (p - 1.0);
  if (!(c < 0)) throw DomainError("g_limit: requires sp - n + sigma < 0");

  const QuadSpec in = detail::inner_spec(spec);
  long inner_evals = 0;
  auto f = [&](double t) {
    double w = std::pow(t, n - 1.0) * (std::pow(t, -sigma) - 1.0) *
               std::pow(std::pow(t, c) - 1.0, p - 1.0);
    if (w == 0.0) return 0.0;
    Estimate k = angular_kernel(t, n + sp, n, in);
    inner_evals += k.evals;
    return w * k.value;
  };
  Estimate e = integrate_1d(f, 0.0, 1.0, true, true, spec);
  e.error += in.rel_tol * std::abs(e.value);
  e.evals += inner_evals;
  return e;
}

}  // namespace fpl
