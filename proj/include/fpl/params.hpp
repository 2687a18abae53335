#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "fpl/errors.hpp"

namespace fpl {

/// Problem parameters: dimension n, fractional order s in (0,1), nonlinearity
/// exponent p in (1,inf), optional right-hand-side exponent q and perturbation
/// exponent sigma.
struct Params {
  int n = 1;
  double s = 0.5;
  double p = 2.0;
  std::optional<double> q;
  std::optional<double> sigma;

  Params() = default;
  Params(int n_, double s_, double p_, std::optional<double> q_ = {},
         std::optional<double> sigma_ = {})
      : n(n_), s(s_), p(p_), q(q_), sigma(sigma_) {
    validate();
  }

  double sp() const { return s * p; }

  void validate() const {
    if (n < 1) throw DomainError("Params: n must be a positive integer");
    if (!(s > 0.0 && s < 1.0)) throw DomainError("Params: s must lie in (0,1)");
    if (!(p > 1.0)) throw DomainError("Params: p must exceed 1");
    if (q && !(*q > 0.0)) throw DomainError("Params: q must be positive");
    if (sigma && !(*sigma > 0.0))
      throw DomainError("Params: sigma must be positive");
  }
};

enum class RegimeKind { SpAtLeastN, SubcriticalQ, CriticalQ, SupercriticalQ };

struct Regime {
  RegimeKind kind;
  std::optional<double> q_star;  // present iff sp < n
};

inline std::string to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::SpAtLeastN: return "SpAtLeastN";
    case RegimeKind::SubcriticalQ: return "SubcriticalQ";
    case RegimeKind::CriticalQ: return "CriticalQ";
    case RegimeKind::SupercriticalQ: return "SupercriticalQ";
  }
  return "?";
}

/// Critical exponent n(p-1)/(n-sp); defined only for sp < n.
inline double critical_exponent(const Params& prm) {
  if (prm.sp() >= prm.n)
    throw DomainError("critical_exponent: requires sp < n");
  return prm.n * (prm.p - 1.0) / (prm.n - prm.sp());
}

/// Classify against the critical exponent.  Equality is decided with relative
/// tolerance 1e-12 so user-typed floating q values classify deterministically.
inline Regime classify(const Params& prm) {
  if (!prm.q) throw MissingParameter("classify: q is required");
  if (prm.sp() >= prm.n) return Regime{RegimeKind::SpAtLeastN, {}};
  double qs = critical_exponent(prm);
  double tol = 1e-12 * std::max(1.0, std::abs(qs));
  if (std::abs(*prm.q - qs) <= tol) return Regime{RegimeKind::CriticalQ, qs};
  if (*prm.q < qs) return Regime{RegimeKind::SubcriticalQ, qs};
  return Regime{RegimeKind::SupercriticalQ, qs};
}

/// Open interval (0, sigma_max) of admissible perturbation exponents in the
/// supercritical regime: sigma must keep both
///   sigma (p-1) + q (n - sp - sigma) > n (p-1)   and   2 sigma + sp < n
/// strictly satisfied.
inline std::pair<double, double> feasible_sigma_interval(const Params& prm) {
  if (!prm.q) throw MissingParameter("feasible_sigma_interval: q is required");
  if (prm.sp() >= prm.n ||
      classify(prm).kind != RegimeKind::SupercriticalQ)
    throw RegimeError("feasible_sigma_interval: requires supercritical q");
  double bound1 = 0.5 * (prm.n - prm.sp());
  double bound2 = (*prm.q * (prm.n - prm.sp()) - prm.n * (prm.p - 1.0)) /
                  (*prm.q - prm.p + 1.0);
  return {0.0, std::min(bound1, bound2)};
}

/// Midpoint of the feasible interval: maximizes margin from both constraint
/// boundaries.
inline double select_sigma(const Params& prm) {
  auto [lo, hi] = feasible_sigma_interval(prm);
  return 0.5 * (lo + hi);
}

/// Params with sigma filled in (taken from prm.sigma, else select_sigma).
inline double resolve_sigma(const Params& prm) {
  if (prm.sigma) {
    auto [lo, hi] = feasible_sigma_interval(prm);
    if (!(*prm.sigma > lo && *prm.sigma < hi))
      throw DomainError("sigma outside the feasible interval");
    return *prm.sigma;
  }
  return select_sigma(prm);
}

}  // namespace fpl
