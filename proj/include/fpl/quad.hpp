#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/geom.hpp"

namespace fpl {

/// Shared tolerances and budgets for every quadrature engine.
struct QuadSpec {
  double rel_tol = 1e-3;        // target relative error
  double abs_tol = 1e-10;       // absolute error floor
  long max_evals = 2000000;     // deterministic (adaptive) budget per call
  long mc_budget = 1000000;     // Monte Carlo sample count
  std::uint64_t seed = 0x5eedULL;
  int threads = 1;

  QuadSpec with_rel_tol(double t) const {
    QuadSpec s = *this;
    s.rel_tol = t;
    return s;
  }
  QuadSpec with_budget(long b) const {
    QuadSpec s = *this;
    s.mc_budget = b;
    return s;
  }
  QuadSpec with_seed(std::uint64_t sd) const {
    QuadSpec s = *this;
    s.seed = sd;
    return s;
  }
};

enum class Method { adaptive, mc, hybrid };

/// Numerical value with an error estimate: a statistical standard error for
/// Monte Carlo, an error bound for adaptive quadrature.
struct Estimate {
  double value = 0.0;
  double error = 0.0;
  long evals = 0;
  Method method = Method::adaptive;

  double rel_error() const {
    return value == 0.0 ? error : error / std::abs(value);
  }
};

inline Estimate combine_sum(const Estimate& a, const Estimate& b) {
  Estimate r;
  r.value = a.value + b.value;
  r.error = std::hypot(a.error, b.error);
  r.evals = a.evals + b.evals;
  r.method = a.method == b.method ? a.method : Method::hybrid;
  return r;
}

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1,1].
inline constexpr double kKronrodX[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0};
inline constexpr double kKronrodW[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728};
inline constexpr double kGaussW[4] = {0.129484966168870, 0.279705391489277,
                                      0.381830050505119, 0.417959183673469};

struct Panel {
  double a, b;
  double value, error;
  bool touches_singular_a, touches_singular_b;
};

inline Panel eval_panel(const std::function<double(double)>& f, double a,
                        double b, long& evals, bool sing_a, bool sing_b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double kron = 0.0, gauss = 0.0;
  for (int i = 0; i < 8; ++i) {
    double fv;
    if (i == 7) {
      fv = f(c);
      ++evals;
      kron += kKronrodW[7] * fv;
      gauss += kGaussW[3] * fv;
    } else {
      double x1 = c - h * kKronrodX[i], x2 = c + h * kKronrodX[i];
      double f1 = f(x1), f2 = f(x2);
      evals += 2;
      if (!std::isfinite(f1))
        throw NonFiniteSample("integrate_1d: non-finite sample at x=" +
                              std::to_string(x1));
      if (!std::isfinite(f2))
        throw NonFiniteSample("integrate_1d: non-finite sample at x=" +
                              std::to_string(x2));
      kron += kKronrodW[i] * (f1 + f2);
      if (i % 2 == 1) gauss += kGaussW[i / 2] * (f1 + f2);
    }
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.value = kron * h;
  p.error = std::abs(kron - gauss) * h;
  p.touches_singular_a = sing_a;
  p.touches_singular_b = sing_b;
  return p;
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration on (a,b).  Endpoints may be flagged as
/// carrying integrable power-type singularities; panels touching a flagged
/// endpoint are split with geometric grading (ratio 1/4) toward it instead of
/// bisection.  `b` may be +infinity (and `a` -infinity); infinite ends are
/// mapped to a finite interval via u -> u/(1-u) and automatically flagged.
inline Estimate integrate_1d(const std::function<double(double)>& f, double a,
                             double b, bool singular_a, bool singular_b,
                             const QuadSpec& spec) {
  const bool inf_a = std::isinf(a), inf_b = std::isinf(b);
  if (inf_a || inf_b) {
    if (inf_a && !inf_b) {
      std::function<double(double)> g = [&f, b](double u) {
        double t = u / (1.0 - u);
        double jac = 1.0 / ((1.0 - u) * (1.0 - u));
        return f(b - t) * jac;
      };
      return integrate_1d(g, 0.0, 1.0, singular_b, true, spec);
    }
    if (inf_b && !inf_a) {
      std::function<double(double)> g = [&f, a](double u) {
        double t = u / (1.0 - u);
        double jac = 1.0 / ((1.0 - u) * (1.0 - u));
        return f(a + t) * jac;
      };
      return integrate_1d(g, 0.0, 1.0, singular_a, true, spec);
    }
    // both infinite: split at zero
    auto left = integrate_1d(f, -std::numeric_limits<double>::infinity(), 0.0,
                             true, false, spec);
    auto right = integrate_1d(f, 0.0, std::numeric_limits<double>::infinity(),
                              false, true, spec);
    return combine_sum(left, right);
  }

  if (!(b > a)) {
    if (a == b) return Estimate{0.0, 0.0, 0, Method::adaptive};
    Estimate r = integrate_1d(f, b, a, singular_b, singular_a, spec);
    r.value = -r.value;
    return r;
  }

  long evals = 0;
  auto cmp = [](const detail::Panel& x, const detail::Panel& y) {
    return x.error < y.error;
  };
  std::priority_queue<detail::Panel, std::vector<detail::Panel>, decltype(cmp)>
      heap(cmp);
  heap.push(detail::eval_panel(f, a, b, evals, singular_a, singular_b));
  double total_value = heap.top().value;
  double total_error = heap.top().error;

  const double width_floor = 1e-280 * std::max(1.0, std::abs(b - a));
  while (total_error > std::max(spec.rel_tol * std::abs(total_value),
                                spec.abs_tol)) {
    if (evals + 30 > spec.max_evals)
      throw BudgetExceeded("integrate_1d: budget exhausted", total_value,
                           total_error);
    detail::Panel worst = heap.top();
    if (worst.b - worst.a < width_floor) break;  // cannot refine further
    heap.pop();
    total_value -= worst.value;
    total_error -= worst.error;
    // grading ratio 1/4 toward flagged singular endpoints, else bisection
    double split;
    if (worst.touches_singular_a && !worst.touches_singular_b)
      split = worst.a + 0.25 * (worst.b - worst.a);
    else if (worst.touches_singular_b && !worst.touches_singular_a)
      split = worst.b - 0.25 * (worst.b - worst.a);
    else
      split = 0.5 * (worst.a + worst.b);
    auto p1 = detail::eval_panel(f, worst.a, split, evals,
                                 worst.touches_singular_a, false);
    auto p2 = detail::eval_panel(f, split, worst.b, evals, false,
                                 worst.touches_singular_b);
    total_value += p1.value + p2.value;
    total_error += p1.error + p2.error;
    heap.push(p1);
    heap.push(p2);
  }
  return Estimate{total_value, std::max(total_error, 0.0), evals,
                  Method::adaptive};
}

inline Estimate integrate_1d(const std::function<double(double)>& f, double a,
                             double b, const QuadSpec& spec) {
  return integrate_1d(f, a, b, false, false, spec);
}

/// Angular kernel K(t) = \int_{S^{n-1}} |e_1 - t\theta|^{-alpha} dsigma(theta).
/// For n = 1 the sphere is the two-point set {-1,+1}; for n >= 2 the integral
/// reduces to the polar angle.  Undefined at t = 1, where the kernel touches
/// the sphere; callers must pair contributions before that limit.
inline Estimate angular_kernel(double t, double alpha, int n,
                               const QuadSpec& spec) {
  if (t < 0) throw DomainError("angular_kernel: t must be >= 0");
  if (t == 1.0)
    throw SingularArgument("angular_kernel: t = 1 is on the sphere");
  if (alpha <= 0) throw DomainError("angular_kernel: alpha must be positive");
  if (n == 1) {
    double v = std::pow(std::abs(1.0 - t), -alpha) + std::pow(1.0 + t, -alpha);
    return Estimate{v, 0.0, 2, Method::adaptive};
  }
  const double wedge = unit_sphere_measure(n - 1);
  auto f = [t, alpha, n](double psi) {
    double sh = std::sin(0.5 * psi);
    double q = (1.0 - t) * (1.0 - t) + 4.0 * t * sh * sh;  // |e1 - t theta|^2
    double v = std::pow(q, -0.5 * alpha);
    if (n > 2) v *= std::pow(std::sin(psi), n - 2);
    return v;
  };
  Estimate e = integrate_1d(f, 0.0, M_PI, true, false, spec);
  e.value *= wedge;
  e.error *= wedge;
  return e;
}

}  // namespace fpl
