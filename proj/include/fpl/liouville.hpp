#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/fields.hpp"
#include "fpl/params.hpp"
#include "fpl/pvop.hpp"
#include "fpl/profiles.hpp"
#include "fpl/quad.hpp"

namespace fpl {

/// Closed-form comparison function behind the folded positivity inequality:
/// for t in (0,1), lambda in [0,1],
///   phi_t(lambda) = t^{(sp-n)/(p-1)} (1 - (lambda + (1-lambda) t^{-2})^{e})
///                   - (lambda + (1-lambda) t^2)^{e} + 1,
/// with e = (sp-n+sigma)/(2(p-1)).  Strictly positive on (0,1)^2, zero at
/// lambda = 1, and (t^{(sp-n+sigma)/(p-1)} - 1)(t^{-sigma/(p-1)} - 1) at 0.
inline double phi_t(double t, double lambda, const Params& prm, double sigma) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("phi_t: t must lie in (0,1)");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw DomainError("phi_t: lambda must lie in [0,1]");
  if (!(prm.sp() < prm.n)) throw DomainError("phi_t: requires sp < n");
  const double e = (prm.sp() - prm.n + sigma) / (2.0 * (prm.p - 1.0));
  const double head = std::pow(t, (prm.sp() - prm.n) / (prm.p - 1.0));
  const double inner1 = lambda + (1.0 - lambda) / (t * t);
  const double inner2 = lambda + (1.0 - lambda) * t * t;
  return head * (1.0 - std::pow(inner1, e)) - std::pow(inner2, e) + 1.0;
}

/// The extreme point of phi_t in (0,1):
///   lambda* = (1 + T)^{-1} (T - t^2)/(1 - t^2),
///   T = t^{2 sigma / (n - sp - sigma + 2(p-1))}.
inline double lambda_star(double t, const Params& prm, double sigma) {
  if (!(t > 0.0 && t < 1.0))
    throw DomainError("lambda_star: t must lie in (0,1)");
  if (!(prm.sp() < prm.n)) throw DomainError("lambda_star: requires sp < n");
  const double T =
      std::pow(t, 2.0 * sigma /
                      (prm.n - prm.sp() - sigma + 2.0 * (prm.p - 1.0)));
  return (T - t * t) / ((1.0 - t * t) * (1.0 + T));
}

struct FInequalityReport {
  struct Row {
    double t, r;
    double margin_lower;  // f(rt) - f(r)
    double margin_upper;  // f(r) - f(r/t)
    double margin_fold;   // t^{sp-n}[f(r)-f(r/t)]^{p-1} - [f(rt)-f(r)]^{p-1}
    double phi_value;     // phi_t(1/(1+r^2))
  };
  std::vector<Row> rows;
  double min_margin_lower = 0, min_margin_upper = 0, min_margin_fold = 0;
  bool all_positive = false;
};

/// Grid check of the monotonicity and fold inequalities of the perturbed
/// profile: f(rt) > f(r) > f(r/t) and
/// t^{sp-n} [f(r)-f(r/t)]^{p-1} > [f(rt)-f(r)]^{p-1}; the sign of the fold
/// margin coincides with the sign of phi_t at lambda = 1/(1+r^2).
inline FInequalityReport check_f_inequalities(const Params& prm, double sigma,
                                              const std::vector<double>& ts,
                                              const std::vector<double>& rs) {
  RadialProfile f = perturbed_power(prm, sigma);
  FInequalityReport rep;
  const double sp = prm.sp(), p = prm.p;
  double m1 = 1e300, m2 = 1e300, m3 = 1e300;
  for (double t : ts) {
    for (double r : rs) {
      FInequalityReport::Row row;
      row.t = t;
      row.r = r;
      double fr = f.value(r), frt = f.value(r * t), frti = f.value(r / t);
      row.margin_lower = frt - fr;
      row.margin_upper = fr - frti;
      row.margin_fold = std::pow(t, sp - prm.n) * std::pow(fr - frti, p - 1.0) -
                        std::pow(frt - fr, p - 1.0);
      row.phi_value = phi_t(t, 1.0 / (1.0 + r * r), prm, sigma);
      rep.rows.push_back(row);
      m1 = std::min(m1, row.margin_lower);
      m2 = std::min(m2, row.margin_upper);
      m3 = std::min(m3, row.margin_fold);
    }
  }
  rep.min_margin_lower = m1;
  rep.min_margin_upper = m2;
  rep.min_margin_fold = m3;
  rep.all_positive = m1 > 0 && m2 > 0 && m3 > 0;
  return rep;
}

struct RatioSample {
  double r = 0;
  double g_value = 0, g_error = 0;
  double ratio = 0;        // R(r) = r^{sigma-n} G(r) / f(r)^q
  double ratio_error = 0;
};

struct SupersolutionReport {
  double sigma = 0;
  std::vector<RatioSample> ratio_samples;
  double fitted_slope = 0;
  double predicted_slope = 0;  // sigma - n - q (sp-n+sigma)/(p-1)
  double M = 0;                // radius beyond which R(r) >= 1
  double c_f = 1;
  double scale = 1;            // c_f^{1/(p-q-1)}
  struct Margin {
    double r, margin, tol;
  };
  std::vector<Margin> verification;
  bool verified = false;
};

inline double predicted_ratio_slope(const Params& prm, double sigma) {
  return sigma - prm.n -
         *prm.q * (prm.sp() - prm.n + sigma) / (prm.p - 1.0);
}

namespace detail {

inline void require_supercritical(const Params& prm, const char* who) {
  if (!prm.q) throw MissingParameter(std::string(who) + ": q is required");
  if (prm.sp() >= prm.n || classify(prm).kind != RegimeKind::SupercriticalQ)
    throw RegimeError(std::string(who) + ": requires the supercritical regime");
}

inline double f_power_q(const Params& prm, double sigma, double r) {
  double c = (prm.sp() - prm.n + sigma) / (prm.p - 1.0);
  return std::pow(1.0 + r * r, 0.5 * c * *prm.q);
}

inline double fit_slope(const std::vector<std::pair<double, double>>& pts) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double m = pts.size();
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace detail

/// Normalized operator-to-power ratio R(r) = r^{sigma-n} G(r) / f(r)^q across
/// the given radii, with a log-log slope fit over the top decade compared to
/// the predicted exponent sigma - n - q (sp-n+sigma)/(p-1).
inline SupersolutionReport ratio_scan(const Params& prm, double sigma,
                                      const std::vector<double>& radii,
                                      const QuadSpec& spec) {
  detail::require_supercritical(prm, "ratio_scan");
  SupersolutionReport rep;
  rep.sigma = sigma;
  rep.predicted_slope = predicted_ratio_slope(prm, sigma);
  for (double r : radii) {
    Estimate g = g_of_r(prm, sigma, r, spec);
    RatioSample smp;
    smp.r = r;
    smp.g_value = g.value;
    smp.g_error = g.error;
    double fac = std::pow(r, sigma - prm.n) / detail::f_power_q(prm, sigma, r);
    smp.ratio = fac * g.value;
    smp.ratio_error = fac * g.error;
    rep.ratio_samples.push_back(smp);
  }
  double rmax = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
  std::vector<std::pair<double, double>> pts;
  for (const auto& smp : rep.ratio_samples)
    if (smp.r >= 0.1 * rmax && smp.ratio > 0)
      pts.emplace_back(std::log(smp.r), std::log(smp.ratio));
  if (pts.size() >= 2) rep.fitted_slope = detail::fit_slope(pts);
  return rep;
}

/// Finds M (doubling, 8 probe radii per octave, R >= 1 required at all of
/// them over [M, 8M]) and then c_f = max(1, max_{|x| <= M} f^q / pv f) by
/// golden-section search on the log-radius axis with parabolic refinement.
inline std::pair<double, double> compute_cf(const Params& prm, double sigma,
                                            const QuadSpec& spec) {
  detail::require_supercritical(prm, "compute_cf");
  RadialProfile f = perturbed_power(prm, sigma);

  auto ratio_R = [&](double r) {
    Estimate g = g_of_r(prm, sigma, r, spec);
    return std::pow(r, sigma - prm.n) * g.value /
           detail::f_power_q(prm, sigma, r);
  };
  double M = 1.0;
  for (int iter = 0;; ++iter) {
    if (iter > 30)
      throw NonConvergence("compute_cf: doubling for M exceeded 2^30");
    bool ok = true;
    for (int j = 0; j < 24 && ok; ++j) {
      double r = M * std::pow(8.0, j / 23.0);
      if (ratio_R(r) < 1.0) ok = false;
    }
    if (ok) break;
    M *= 2.0;
  }

  // the target is radial: maximize f(r)^q / pv(r) over [0, M]
  auto target = [&](double r) {
    Estimate pv = pv_apply_radial(f, r, prm, spec);
    if (!(pv.value > 0))
      throw DomainError("compute_cf: operator value not positive at a probe");
    return detail::f_power_q(prm, sigma, r) / pv.value;
  };
  const double lo = std::log(1e-4 * M), hi = std::log(M);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double fc1 = target(std::exp(c1)), fc2 = target(std::exp(c2));
  while (b - a > 1e-4 * std::max(1.0, std::abs(b))) {
    if (fc1 < fc2) {
      a = c1;
      c1 = c2;
      fc1 = fc2;
      c2 = a + gr * (b - a);
      fc2 = target(std::exp(c2));
    } else {
      b = c2;
      c2 = c1;
      fc2 = fc1;
      c1 = b - gr * (b - a);
      fc1 = target(std::exp(c1));
    }
  }
  double xm = 0.5 * (a + b), fm = std::max(fc1, fc2);
  // parabolic refinement on the log axis
  {
    double hstep = 0.5 * (b - a) + 1e-6;
    double x0 = xm - hstep, x2 = xm + hstep;
    double f0 = target(std::exp(x0)), f1 = fm, f2 = target(std::exp(x2));
    double denom = f0 - 2.0 * f1 + f2;
    if (std::abs(denom) > 1e-300) {
      double xv = xm - hstep * 0.5 * (f2 - f0) / denom;
      if (xv > lo && xv < hi) {
        double fv = target(std::exp(xv));
        if (fv > fm) fm = fv;
      }
    }
  }
  // compare with the center value r = 0
  Estimate pv0 = pv_apply_radial(f, 0.0, prm, spec);
  if (pv0.value > 0) fm = std::max(fm, detail::f_power_q(prm, sigma, 0.0) / pv0.value);
  double c_f = std::max(1.0, fm);
  return {M, c_f};
}

/// End-to-end construction of the supercritical positive supersolution
/// u = c_f^{1/(p-q-1)} f, verified pointwise at 100 log-spaced radii in
/// [0, 8M]: margin(x) = pv u(x) - u(x)^q must be >= -3 * local error.
/// Uses the degree-(p-1) homogeneity pv(lambda f) = lambda^{p-1} pv(f).
inline SupersolutionReport build_supersolution(const Params& prm,
                                               const QuadSpec& spec) {
  detail::require_supercritical(prm, "build_supersolution");
  const double sigma = resolve_sigma(prm);
  std::vector<double> radii;
  for (int i = 0; i < 16; ++i)
    radii.push_back(std::pow(10.0, 0.0 + 4.0 * i / 15.0));
  SupersolutionReport rep = ratio_scan(prm, sigma, radii, spec);

  auto [M, c_f] = compute_cf(prm, sigma, spec);
  rep.M = M;
  rep.c_f = c_f;
  rep.scale = std::pow(c_f, 1.0 / (prm.p - *prm.q - 1.0));

  RadialProfile f = perturbed_power(prm, sigma);
  const double lam = rep.scale;
  const double lam_pm1 = std::pow(lam, prm.p - 1.0);
  bool ok = true;
  std::string offenders;
  for (int i = 0; i < 100; ++i) {
    double r = i == 0 ? 0.0 : 8.0 * M * std::pow(10.0, -3.0 + 3.0 * i / 99.0);
    Estimate pv = pv_apply_radial(f, r, prm, spec);
    double uq = std::pow(lam * f.value(r), *prm.q);
    SupersolutionReport::Margin m;
    m.r = r;
    m.margin = lam_pm1 * pv.value - uq;
    m.tol = 3.0 * lam_pm1 * pv.error;
    rep.verification.push_back(m);
    if (m.margin < -m.tol) {
      ok = false;
      offenders += " r=" + std::to_string(r) +
                   " margin=" + std::to_string(m.margin);
    }
  }
  rep.verified = ok;
  if (!ok)
    throw VerificationFailure("build_supersolution: negative margins at" +
                              offenders);
  return rep;
}

}  // namespace fpl
