#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/params.hpp"
#include "fpl/quad.hpp"

namespace fpl {

namespace detail {

// Compactly supported mollifier machinery for the smooth cutoff eta:
// eta == 1 on [0,1], eta == 0 on [2,inf), and on (1,2)
//   eta(rho) = S(2 - rho),  S(tau) = int_0^tau psi / int_0^1 psi,
//   psi(u)   = exp(-1/(u(1-u))).
// S is tabulated once per process on a uniform grid and interpolated with a
// monotone (Fritsch-Carlson) cubic; eta' and eta'' use the closed forms
// eta'(rho) = -psi(2-rho)/Z and eta''(rho) = psi'(2-rho)/Z, so only the values
// of eta go through the table.
inline double mollifier_psi(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return std::exp(-1.0 / (u * (1.0 - u)));
}

inline double mollifier_psi_prime(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  double d = u * (1.0 - u);
  return mollifier_psi(u) * (1.0 - 2.0 * u) / (d * d);
}

class SmoothStepTable {
 public:
  static const SmoothStepTable& instance() {
    static SmoothStepTable t;
    return t;
  }

  double normalization() const { return z_; }

  /// S(tau) for tau in [0,1]; clamped outside.
  double value(double tau) const {
    if (tau <= 0.0) return 0.0;
    if (tau >= 1.0) return 1.0;
    double u = tau * (kCells);
    int i = std::min(static_cast<int>(u), kCells - 1);
    double t = u - i;
    double hh = 1.0 / kCells;
    // cubic Hermite on cell i with monotone-limited slopes
    double y0 = s_[i], y1 = s_[i + 1], m0 = d_[i] * hh, m1 = d_[i + 1] * hh;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 +
           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1;
  }

 private:
  static constexpr int kCells = 2048;

  SmoothStepTable() {
    QuadSpec spec;
    spec.rel_tol = 1e-12;
    spec.abs_tol = 1e-16;
    s_.resize(kCells + 1);
    d_.resize(kCells + 1);
    double acc = 0.0;
    s_[0] = 0.0;
    for (int i = 1; i <= kCells; ++i) {
      double a = static_cast<double>(i - 1) / kCells;
      double b = static_cast<double>(i) / kCells;
      acc += integrate_1d([](double u) { return mollifier_psi(u); }, a, b,
                          false, false, spec)
                 .value;
      s_[i] = acc;
    }
    z_ = acc;
    for (auto& v : s_) v /= z_;
    // exact derivative S' = psi/Z at the knots keeps interpolation monotone
    for (int i = 0; i <= kCells; ++i)
      d_[i] = mollifier_psi(static_cast<double>(i) / kCells) / z_;
  }

  std::vector<double> s_, d_;
  double z_ = 1.0;
};

}  // namespace detail

/// Smooth transition eta: [0,inf) -> [0,1], identically 1 on [0,1], 0 on
/// [2,inf), infinitely differentiable.
inline double cutoff_eta(double rho) {
  if (rho <= 1.0) return 1.0;
  if (rho >= 2.0) return 0.0;
  return detail::SmoothStepTable::instance().value(2.0 - rho);
}

inline double cutoff_eta_prime(double rho) {
  if (rho <= 1.0 || rho >= 2.0) return 0.0;
  return -detail::mollifier_psi(2.0 - rho) /
         detail::SmoothStepTable::instance().normalization();
}

inline double cutoff_eta_second(double rho) {
  if (rho <= 1.0 || rho >= 2.0) return 0.0;
  return detail::mollifier_psi_prime(2.0 - rho) /
         detail::SmoothStepTable::instance().normalization();
}

/// One-dimensional radial profile with exact derivatives.
struct RadialProfile {
  std::string kind;
  std::function<double(double)> value;
  std::function<double(double)> deriv;
  std::function<double(double)> deriv2;

  bool singular_at_origin = false;
  double origin_exponent = 0.0;  // value ~ r^{origin_exponent} as r -> 0
  double decay_exponent = 0.0;   // |value(r)| <= decay_constant (1+r)^{gamma}, r >= 1
  double decay_constant = 1.0;
  double support_radius = std::numeric_limits<double>::infinity();
  double extra = 0.0;  // kind-specific parameter (r0, radius, width, beta)
};

/// r^{(sp-n)/(p-1)}, the power branch of the fundamental profile (sp < n).
inline RadialProfile fundamental_power(const Params& prm) {
  if (!(prm.sp() < prm.n))
    throw DomainError("fundamental_power: requires sp < n");
  double beta = (prm.sp() - prm.n) / (prm.p - 1.0);
  RadialProfile f;
  f.kind = "fundamental_power";
  f.value = [beta](double r) { return std::pow(r, beta); };
  f.deriv = [beta](double r) { return beta * std::pow(r, beta - 1.0); };
  f.deriv2 = [beta](double r) {
    return beta * (beta - 1.0) * std::pow(r, beta - 2.0);
  };
  f.singular_at_origin = true;
  f.origin_exponent = beta;
  f.decay_exponent = beta;
  f.decay_constant = 1.0;
  return f;
}

/// ln(1/r), the logarithmic branch (sp = n).
inline RadialProfile fundamental_log(const Params& prm) {
  if (std::abs(prm.sp() - prm.n) > 1e-12 * prm.n)
    throw DomainError("fundamental_log: requires sp = n");
  RadialProfile f;
  f.kind = "fundamental_log";
  f.value = [](double r) { return -std::log(r); };
  f.deriv = [](double r) { return -1.0 / r; };
  f.deriv2 = [](double r) { return 1.0 / (r * r); };
  f.singular_at_origin = true;
  f.origin_exponent = 0.0;  // logarithmic, weaker than any power
  // ln(1+r) <= (1/g)(1+r)^g for any g > 0
  double g = std::min(0.5, 0.5 * prm.sp() / (prm.p - 1.0));
  f.decay_exponent = g;
  f.decay_constant = 1.0 / g + 1.0;
  return f;
}

/// (1 + r^2)^{(sp-n+sigma)/(2(p-1))}: smooth, strictly positive, radially
/// strictly decreasing perturbation of the fundamental profile.
inline RadialProfile perturbed_power(const Params& prm, double sigma) {
  double c = (prm.sp() - prm.n + sigma) / (prm.p - 1.0);
  if (!(c < 0))
    throw DomainError("perturbed_power: requires sp - n + sigma < 0");
  RadialProfile f;
  f.kind = "perturbed_power";
  f.value = [c](double r) { return std::pow(1.0 + r * r, 0.5 * c); };
  f.deriv = [c](double r) {
    return c * r * std::pow(1.0 + r * r, 0.5 * c - 1.0);
  };
  f.deriv2 = [c](double r) {
    double q = 1.0 + r * r;
    return c * std::pow(q, 0.5 * c - 2.0) * (1.0 + (c - 1.0) * r * r);
  };
  f.decay_exponent = c;
  f.decay_constant = 1.0;
  f.extra = sigma;
  return f;
}

/// (1/r0^2 + rho^2)^{(sp-n+sigma)/(2(p-1))}: the perturbed profile rescaled to
/// unit radius.
inline RadialProfile scaled_perturbed(const Params& prm, double sigma,
                                      double r0) {
  if (!(r0 > 0)) throw DomainError("scaled_perturbed: requires r0 > 0");
  double c = (prm.sp() - prm.n + sigma) / (prm.p - 1.0);
  if (!(c < 0))
    throw DomainError("scaled_perturbed: requires sp - n + sigma < 0");
  double a = 1.0 / (r0 * r0);
  RadialProfile f;
  f.kind = "scaled_perturbed";
  f.value = [c, a](double r) { return std::pow(a + r * r, 0.5 * c); };
  f.deriv = [c, a](double r) {
    return c * r * std::pow(a + r * r, 0.5 * c - 1.0);
  };
  f.deriv2 = [c, a](double r) {
    double q = a + r * r;
    return c * std::pow(q, 0.5 * c - 2.0) * (a + (c - 1.0) * r * r);
  };
  f.decay_exponent = c;
  f.decay_constant = 1.0;
  f.extra = r0;
  return f;
}

/// Smooth cutoff at scale R: identically 1 on [0,R], 0 beyond 2R.
inline RadialProfile smooth_cutoff(double R) {
  if (!(R > 0)) throw DomainError("smooth_cutoff: requires R > 0");
  RadialProfile f;
  f.kind = "smooth_cutoff";
  f.value = [R](double r) { return cutoff_eta(r / R); };
  f.deriv = [R](double r) { return cutoff_eta_prime(r / R) / R; };
  f.deriv2 = [R](double r) { return cutoff_eta_second(r / R) / (R * R); };
  f.decay_exponent = 0.0;
  f.decay_constant = 1.0;
  f.support_radius = 2.0 * R;
  f.extra = R;
  return f;
}

inline RadialProfile gaussian_bump(double width) {
  if (!(width > 0)) throw DomainError("gaussian_bump: requires width > 0");
  double w2 = width * width;
  RadialProfile f;
  f.kind = "gaussian_bump";
  f.value = [w2](double r) { return std::exp(-r * r / w2); };
  f.deriv = [w2](double r) { return -2.0 * r / w2 * std::exp(-r * r / w2); };
  f.deriv2 = [w2](double r) {
    return (4.0 * r * r / (w2 * w2) - 2.0 / w2) * std::exp(-r * r / w2);
  };
  f.decay_exponent = 0.0;
  f.decay_constant = 1.0;
  f.extra = width;
  return f;
}

inline RadialProfile homogeneous_power(double beta) {
  RadialProfile f;
  f.kind = "homogeneous_power";
  f.value = [beta](double r) { return std::pow(r, beta); };
  f.deriv = [beta](double r) { return beta * std::pow(r, beta - 1.0); };
  f.deriv2 = [beta](double r) {
    return beta * (beta - 1.0) * std::pow(r, beta - 2.0);
  };
  f.singular_at_origin = beta < 0.0 || (beta > 0.0 && beta != std::floor(beta));
  f.origin_exponent = beta;
  f.decay_exponent = std::max(beta, 0.0);
  f.decay_constant = 1.0;
  f.extra = beta;
  return f;
}

inline RadialProfile constant_profile(double c) {
  RadialProfile f;
  f.kind = "constant";
  f.value = [c](double) { return c; };
  f.deriv = [](double) { return 0.0; };
  f.deriv2 = [](double) { return 0.0; };
  f.decay_exponent = 0.0;
  f.decay_constant = std::abs(c);
  f.extra = c;
  return f;
}

}  // namespace fpl
