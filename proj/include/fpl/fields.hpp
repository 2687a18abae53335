#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/geom.hpp"
#include "fpl/mc.hpp"
#include "fpl/params.hpp"
#include "fpl/profiles.hpp"
#include "fpl/quad.hpp"

namespace fpl {

/// Scalar kernel h(t) = |t|^{p-2} t with the convention h(0) = 0, which is the
/// continuous extension also for p < 2 where |t|^{p-2} diverges at 0.
inline double h_kernel(double t, double p) {
  if (t == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(t), p - 1.0), t);
}

struct SingularPoint {
  Vec location;
  double value_exponent = 0.0;  // |u| ~ dist^{value_exponent} near the point
};

struct TailBound {
  double exponent = 0.0;  // gamma
  double constant = 1.0;  // C: |u(x)| <= C (1+|x|)^gamma for |x| >= 1
};

/// n-dimensional scalar function with the smoothness and growth metadata the
/// principal-value evaluator needs: gradient, a uniform bound on second
/// derivatives over balls, a tail growth bound, and declared singular points.
struct ScalarField {
  int dim = 1;
  std::function<double(const Vec&)> evaluate;
  std::function<Vec(const Vec&)> gradient;
  std::function<double(const Vec&, double)> hessian_bound;  // sup over ball(c,r)
  TailBound tail;
  double holder_exponent = 1.0;  // sigma of the local C^{1,sigma} regularity
  std::vector<SingularPoint> singular_points;
  double support_radius = std::numeric_limits<double>::infinity();
  Vec support_center;  // meaningful when support_radius < inf
  std::shared_ptr<const RadialProfile> profile;  // set for radial fields

  /// Distance from x to the nearest declared singular point (inf if none).
  double smoothness_radius(const Vec& x) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& sp : singular_points) d = std::min(d, dist(x, sp.location));
    return d;
  }
};

/// Wrap a radial profile as a field on R^dim: u(x) = value(|x|), gradient
/// along x/|x|.  The Hessian bound samples |v''| + |v'|/rho over the radius
/// interval touched by the ball; for the closed-form profiles in this library
/// that sup is attained (up to the sampling margin) at one of the ends.
inline ScalarField make_field(const RadialProfile& prof, int dim) {
  auto p = std::make_shared<RadialProfile>(prof);
  ScalarField u;
  u.dim = dim;
  u.profile = p;
  u.evaluate = [p](const Vec& x) { return p->value(x.norm()); };
  u.gradient = [p](const Vec& x) {
    double r = x.norm();
    if (r == 0.0) {
      if (p->singular_at_origin)
        throw SingularityError("gradient requested at a singular origin");
      // smooth radial profiles have v'(0) = 0
      Vec g(x.dim);
      return g;
    }
    return (p->deriv(r) / r) * x;
  };
  u.hessian_bound = [p](const Vec& c, double radius) {
    double r = c.norm();
    double lo = std::max(p->singular_at_origin ? 1e-12 : 0.0, r - radius);
    double hi = r + radius;
    double bound = 0.0;
    const int kSamples = 64;
    for (int i = 0; i <= kSamples; ++i) {
      double rho = lo + (hi - lo) * i / kSamples;
      double v2 = std::abs(p->deriv2(rho));
      double v1 = rho > 0 ? std::abs(p->deriv(rho)) / rho : v2;
      bound = std::max(bound, v2 + v1);
    }
    return 1.5 * bound;  // sampling margin
  };
  u.tail = TailBound{p->decay_exponent, p->decay_constant};
  if (p->singular_at_origin)
    u.singular_points.push_back({Vec(dim), p->origin_exponent});
  u.support_radius = p->support_radius;
  u.support_center = Vec(dim);
  return u;
}

/// phi_r(x) = eta(x / r): identically 1 on the ball of radius r, supported in
/// the closed ball of radius 2r, values in [0,1].
inline ScalarField cutoff_field(double r, int dim) {
  return make_field(smooth_cutoff(r), dim);
}

inline ScalarField constant_field(double c, int dim) {
  return make_field(constant_profile(c), dim);
}

/// u shifted so its features sit at `center`.
inline ScalarField translate_field(const ScalarField& u, const Vec& center) {
  ScalarField v = u;
  v.evaluate = [u, center](const Vec& x) { return u.evaluate(x - center); };
  v.gradient = [u, center](const Vec& x) { return u.gradient(x - center); };
  v.hessian_bound = [u, center](const Vec& c, double rad) {
    return u.hessian_bound(c - center, rad);
  };
  v.singular_points.clear();
  for (const auto& sp : u.singular_points)
    v.singular_points.push_back({sp.location + center, sp.value_exponent});
  v.support_center = u.support_center + center;
  // the tail constant absorbs the shift: (1+|x-c|) <= (1+|c|)(1+|x|)
  double shift = 1.0 + center.norm();
  v.tail.constant =
      u.tail.constant * std::pow(shift, std::abs(u.tail.exponent));
  return v;
}

/// lambda * u.
inline ScalarField scale_field(const ScalarField& u, double lambda) {
  ScalarField v = u;
  v.evaluate = [u, lambda](const Vec& x) { return lambda * u.evaluate(x); };
  v.gradient = [u, lambda](const Vec& x) { return lambda * u.gradient(x); };
  v.hessian_bound = [u, lambda](const Vec& c, double rad) {
    return std::abs(lambda) * u.hessian_bound(c, rad);
  };
  v.tail.constant = std::abs(lambda) * u.tail.constant;
  return v;
}

/// Tail-space integral  \int |u(x)|^{p-1} (1+|x|)^{-n-sp} dx.
/// Requires (p-1) * gamma < sp so the integrand decays.
inline Estimate tail_norm(const ScalarField& u, const Params& prm,
                          const QuadSpec& spec) {
  const int n = u.dim;
  const double sp = prm.sp();
  const double tail_decay = sp - (prm.p - 1.0) * u.tail.exponent;
  if (!(tail_decay > 0))
    throw DivergenceError("tail_norm: (p-1)*gamma >= sp, integral diverges");

  PointSampler sampler(n);
  sampler.add(Component::uniform_ball(Vec(n), 4.0), 0.4);
  sampler.add(Component::pareto_shell(Vec(n), tail_decay, 4.0), 0.4);
  for (const auto& sgp : u.singular_points) {
    double a = std::clamp(n + sgp.value_exponent * (prm.p - 1.0), 0.05,
                          static_cast<double>(n));
    sampler.add(Component::power_ball(sgp.location, a, 2.0),
                0.2 / u.singular_points.size());
  }
  sampler.normalize();

  auto f = [&u, &prm, n](const Vec& x) {
    double v = u.evaluate(x);
    if (v == 0.0) return 0.0;
    return std::pow(std::abs(v), prm.p - 1.0) *
           std::pow(1.0 + x.norm(), -n - prm.sp());
  };
  return mc_integrate(sampler, f, spec);
}

struct Box {
  Vec lo, hi;
  static Box cube(int dim, double a, double b) {
    Box box;
    box.lo = Vec(dim);
    box.hi = Vec(dim);
    for (int i = 0; i < dim; ++i) {
      box.lo[i] = a;
      box.hi[i] = b;
    }
    return box;
  }
  bool contains(const Vec& x) const {
    for (int i = 0; i < x.dim; ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  double diameter() const { return (hi - lo).norm(); }
};

/// Gagliardo seminorm of u over box x box:
///   ( \int\int |u(x)-u(y)|^p |x-y|^{-n-sp} dy dx )^{1/p}.
/// The diagonal is tamed by |u(x)-u(y)| <~ |x-y| for Lipschitz u; declared
/// singular points get their own importance components, and a singular point
/// whose p-energy diverges inside the box raises DivergenceError.
inline Estimate gagliardo_seminorm(const ScalarField& u, const Box& box,
                                   const Params& prm, const QuadSpec& spec) {
  const int n = u.dim;
  const double sp = prm.sp(), p = prm.p;

  for (const auto& sgp : u.singular_points) {
    if (box.contains(sgp.location) && sgp.value_exponent * p <= -n)
      throw DivergenceError(
          "gagliardo_seminorm: singular point energy diverges in the box");
  }

  PairSampler sampler(n);
  sampler.add_x(Component::uniform_box(box.lo, box.hi), 0.7);
  for (const auto& sgp : u.singular_points)
    sampler.add_x(Component::power_ball(sgp.location,
                                        std::clamp(n + sgp.value_exponent * p,
                                                   0.05,
                                                   static_cast<double>(n)),
                                        box.diameter()),
                  0.3 / u.singular_points.size());
  if (u.singular_points.empty())
    sampler.add_x(Component::uniform_box(box.lo, box.hi), 0.3);
  sampler.add_y(Component::uniform_box(box.lo, box.hi), 0.45);
  double a_near = std::clamp(p - sp, 0.05, static_cast<double>(n));
  double scale = 0.5 * box.diameter();
  sampler.set_near_diagonal(0.55, a_near,
                            [scale](const Vec&) { return scale; });
  sampler.normalize();

  auto f = [&u, &box, n, sp, p](const PairPoint& s) {
    if (!box.contains(s.x) || !box.contains(s.y)) return 0.0;
    double du = u.evaluate(s.x) - u.evaluate(s.y);
    if (du == 0.0) return 0.0;
    double r = dist(s.x, s.y);
    if (r == 0.0) return 0.0;
    return std::pow(std::abs(du), p) * std::pow(r, -n - sp);
  };
  Estimate energy = mc_integrate(sampler, f, spec);
  // delta method for the 1/p root
  Estimate out;
  out.value = std::pow(std::max(energy.value, 0.0), 1.0 / p);
  out.error = energy.value > 0
                  ? energy.error * out.value / (p * energy.value)
                  : std::pow(energy.error, 1.0 / p);
  out.evals = energy.evals;
  out.method = Method::mc;
  return out;
}

}  // namespace fpl
