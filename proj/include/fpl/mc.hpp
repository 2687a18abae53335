#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fpl/errors.hpp"
#include "fpl/geom.hpp"
#include "fpl/quad.hpp"
#include "fpl/rng.hpp"

namespace fpl {

/// One isotropic mixture component for importance sampling in R^n.
///   PowerBall(center, a, R):   pdf ~ |x-c|^{a-n} on the ball |x-c| < R
///   ParetoShell(center, b, R): pdf ~ |x-c|^{-n-b} on |x-c| >= R
///   UniformBall(center, R):    constant pdf on the ball
///   UniformBox(lo, hi):        constant pdf on an axis-aligned box
struct Component {
  enum class Kind { PowerBall, ParetoShell, UniformBall, UniformBox, Gaussian };
  Kind kind = Kind::UniformBall;
  Vec center;
  double expo = 1.0;    // a for PowerBall, b for ParetoShell
  double radius = 1.0;  // R; standard deviation for Gaussian
  Vec lo, hi;           // UniformBox bounds

  static Component power_ball(const Vec& c, double a, double R) {
    Component k;
    k.kind = Kind::PowerBall;
    k.center = c;
    k.expo = a;
    k.radius = R;
    return k;
  }
  static Component pareto_shell(const Vec& c, double b, double R) {
    Component k;
    k.kind = Kind::ParetoShell;
    k.center = c;
    k.expo = b;
    k.radius = R;
    return k;
  }
  static Component uniform_ball(const Vec& c, double R) {
    Component k;
    k.kind = Kind::UniformBall;
    k.center = c;
    k.radius = R;
    return k;
  }
  static Component uniform_box(const Vec& lo, const Vec& hi) {
    Component k;
    k.kind = Kind::UniformBox;
    k.lo = lo;
    k.hi = hi;
    k.center = 0.5 * (lo + hi);
    return k;
  }
  static Component gaussian(const Vec& c, double sigma) {
    Component k;
    k.kind = Kind::Gaussian;
    k.center = c;
    k.radius = sigma;
    return k;
  }

  double pdf(const Vec& x) const {
    const int n = x.dim;
    switch (kind) {
      case Kind::PowerBall: {
        double r = dist(x, center);
        if (r >= radius) return 0.0;
        double norm = expo / (unit_sphere_measure(n) * std::pow(radius, expo));
        return norm * std::pow(r, expo - n);
      }
      case Kind::ParetoShell: {
        double r = dist(x, center);
        if (r < radius) return 0.0;
        double norm = expo * std::pow(radius, expo) / unit_sphere_measure(n);
        return norm * std::pow(r, -n - expo);
      }
      case Kind::UniformBall: {
        double r = dist(x, center);
        if (r >= radius) return 0.0;
        return 1.0 / (unit_ball_volume(n) * std::pow(radius, n));
      }
      case Kind::UniformBox: {
        double vol = 1.0;
        for (int i = 0; i < n; ++i) {
          if (x[i] < lo[i] || x[i] > hi[i]) return 0.0;
          vol *= hi[i] - lo[i];
        }
        return 1.0 / vol;
      }
      case Kind::Gaussian: {
        double r2 = (x - center).norm2();
        double s2 = radius * radius;
        return std::exp(-0.5 * r2 / s2) *
               std::pow(2.0 * M_PI * s2, -0.5 * n);
      }
    }
    return 0.0;
  }

  Vec draw(CounterRng& rng, int n) const {
    switch (kind) {
      case Kind::PowerBall: {
        double r = radius * std::pow(rng.uniform(), 1.0 / expo);
        return center + r * rng.direction(n);
      }
      case Kind::ParetoShell: {
        double r = radius * std::pow(rng.uniform(), -1.0 / expo);
        return center + r * rng.direction(n);
      }
      case Kind::UniformBall: {
        double r = radius * std::pow(rng.uniform(), 1.0 / n);
        return center + r * rng.direction(n);
      }
      case Kind::UniformBox: {
        Vec x(n);
        for (int i = 0; i < n; ++i)
          x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
        return x;
      }
      case Kind::Gaussian: {
        Vec x(n);
        for (int i = 0; i < n; ++i) x[i] = center[i] + radius * rng.normal();
        return x;
      }
    }
    return Vec(n);
  }
};

/// Mixture sampler over R^n for single integrals.  Strata coincide with the
/// mixture components; the density used in the estimator is the full mixture
/// (balance heuristic), so stratum allocation never biases the result.
class PointSampler {
 public:
  using Sample = Vec;

  PointSampler(int dim) : dim_(dim) {}

  void add(const Component& c, double weight) {
    comps_.push_back(c);
    weights_.push_back(weight);
  }
  void normalize() {
    double s = 0;
    for (double w : weights_) s += w;
    for (double& w : weights_) w /= s;
  }

  int dim() const { return dim_; }
  std::size_t strata() const { return comps_.size(); }
  double stratum_weight(std::size_t k) const { return weights_[k]; }
  Sample draw(std::size_t k, CounterRng& rng) const {
    return comps_[k].draw(rng, dim_);
  }
  double density(const Sample& x) const {
    double s = 0;
    for (std::size_t k = 0; k < comps_.size(); ++k)
      s += weights_[k] * comps_[k].pdf(x);
    return s;
  }

 private:
  int dim_;
  std::vector<Component> comps_;
  std::vector<double> weights_;
};

struct PairPoint {
  Vec x, y;
};

/// Mixture sampler over R^n x R^n for singular double integrals.  The first
/// point is drawn from a fixed mixture; the second from a conditional mixture
/// that combines fixed components with two point-relative families: a graded
/// power ball around x (near-diagonal singularity) and a Pareto shell around
/// x (far field).  The joint density factorizes, so it is evaluable in closed
/// form at any pair.
class PairSampler {
 public:
  using Sample = PairPoint;

  PairSampler(int dim) : dim_(dim) {}

  void add_x(const Component& c, double weight) {
    xc_.push_back(c);
    xw_.push_back(weight);
  }
  void add_y(const Component& c, double weight) {
    yc_.push_back(c);
    yw_.push_back(weight);
  }
  /// Near-diagonal conditional ball around x; `local_scale` gives its radius.
  void set_near_diagonal(double weight, double expo,
                         std::function<double(const Vec&)> local_scale) {
    w_near_ = weight;
    a_near_ = expo;
    local_scale_ = std::move(local_scale);
  }
  /// Far-field conditional shell around x with inner radius min(1, scale(x)).
  void set_far_shell(double weight, double expo) {
    w_shell_ = weight;
    b_shell_ = expo;
  }
  void normalize() {
    double sx = 0, sy = w_near_ + w_shell_;
    for (double w : xw_) sx += w;
    for (double w : yw_) sy += w;
    for (double& w : xw_) w /= sx;
    for (double& w : yw_) w /= sy;
    w_near_ /= sy;
    w_shell_ /= sy;
  }

  int dim() const { return dim_; }
  std::size_t y_strata() const {
    return yc_.size() + (w_near_ > 0 ? 1 : 0) + (w_shell_ > 0 ? 1 : 0);
  }
  std::size_t strata() const { return xc_.size() * y_strata(); }
  double stratum_weight(std::size_t k) const {
    std::size_t i = k / y_strata(), j = k % y_strata();
    double wy;
    if (j < yc_.size())
      wy = yw_[j];
    else if (j == yc_.size() && w_near_ > 0)
      wy = w_near_;
    else
      wy = w_shell_;
    return xw_[i] * wy;
  }

  Sample draw(std::size_t k, CounterRng& rng) const {
    std::size_t i = k / y_strata(), j = k % y_strata();
    PairPoint s;
    s.x = xc_[i].draw(rng, dim_);
    if (j < yc_.size()) {
      s.y = yc_[j].draw(rng, dim_);
    } else if (j == yc_.size() && w_near_ > 0) {
      s.y = near_comp(s.x).draw(rng, dim_);
    } else {
      s.y = shell_comp(s.x).draw(rng, dim_);
    }
    return s;
  }

  double density(const Sample& s) const {
    double px = 0;
    for (std::size_t i = 0; i < xc_.size(); ++i)
      px += xw_[i] * xc_[i].pdf(s.x);
    double py = 0;
    for (std::size_t j = 0; j < yc_.size(); ++j)
      py += yw_[j] * yc_[j].pdf(s.y);
    if (w_near_ > 0) py += w_near_ * near_comp(s.x).pdf(s.y);
    if (w_shell_ > 0) py += w_shell_ * shell_comp(s.x).pdf(s.y);
    return px * py;
  }

 private:
  Component near_comp(const Vec& x) const {
    return Component::power_ball(x, a_near_, local_scale_(x));
  }
  Component shell_comp(const Vec& x) const {
    return Component::pareto_shell(x, b_shell_,
                                   std::min(1.0, local_scale_(x)));
  }

  int dim_;
  std::vector<Component> xc_, yc_;
  std::vector<double> xw_, yw_;
  double w_near_ = 0, a_near_ = 1.0;
  double w_shell_ = 0, b_shell_ = 1.0;
  std::function<double(const Vec&)> local_scale_ = [](const Vec&) {
    return 1.0;
  };
};

namespace detail {

inline std::string format_sample(const Vec& x) {
  std::string s = "(";
  for (int i = 0; i < x.dim; ++i)
    s += (i ? "," : "") + std::to_string(x[i]);
  return s + ")";
}

inline std::string format_sample(const PairPoint& s) {
  return "x=" + format_sample(s.x) + " y=" + format_sample(s.y);
}

struct StratumAcc {
  double sum = 0, sum2 = 0;
  long n = 0;
  void add(double v) {
    sum += v;
    sum2 += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double var() const {
    if (n < 2) return 0.0;
    double m = mean();
    return std::max(0.0, (sum2 - n * m * m) / (n - 1));
  }
};

}  // namespace detail

/// Stratified mean-of-ratios Monte Carlo over a mixture sampler.  A pilot run
/// (1% of the budget, evenly split) measures per-stratum variances; the
/// remaining budget is allocated proportionally to weight * stddev.  Samples
/// are keyed by (seed, stratum, index), evaluated in fixed 64k chunks, and
/// chunk sums are reduced in index order, so results are bit-identical for a
/// given (seed, budget) regardless of thread count.
template <class Sampler, class F>
Estimate mc_integrate(const Sampler& sampler, F&& integrand,
                      const QuadSpec& spec) {
  const std::size_t K = sampler.strata();
  if (K == 0) throw DomainError("mc_integrate: sampler has no components");
  const long budget = std::max<long>(spec.mc_budget, static_cast<long>(64 * K));

  auto run_range = [&](std::size_t k, long i0, long i1,
                       detail::StratumAcc& acc) {
    for (long i = i0; i < i1; ++i) {
      CounterRng rng(spec.seed, static_cast<std::uint64_t>(k),
                     static_cast<std::uint64_t>(i));
      auto s = sampler.draw(k, rng);
      double rho = sampler.density(s);
      double f = integrand(s);
      if (f == 0.0) {
        acc.add(0.0);
        continue;
      }
      if (!std::isfinite(f))
        throw NonFiniteSample("mc_integrate: non-finite integrand at stratum " +
                              std::to_string(k) + " index " +
                              std::to_string(i) + " " +
                              detail::format_sample(s));
      if (!(rho > 0.0))
        throw ZeroDensityHit(
            "mc_integrate: zero sampler density at a point with nonzero "
            "integrand, stratum " +
            std::to_string(k) + " " + detail::format_sample(s));
      double ratio = f / rho;
      if (!std::isfinite(ratio)) {
        // density overflowed to +inf at a sampled point: contributes nothing
        acc.add(0.0);
        continue;
      }
      acc.add(ratio);
    }
  };

  // pilot: 1% of the budget split evenly
  const long pilot_per =
      std::max<long>(32, budget / 100 / static_cast<long>(K));
  std::vector<detail::StratumAcc> acc(K);
  for (std::size_t k = 0; k < K; ++k) run_range(k, 0, pilot_per, acc[k]);

  // Neyman allocation on pilot stddevs (pilot samples are kept)
  long used = pilot_per * static_cast<long>(K);
  long remaining = std::max<long>(0, budget - used);
  std::vector<long> extra(K, 0);
  double tot = 0;
  for (std::size_t k = 0; k < K; ++k)
    tot += sampler.stratum_weight(k) * std::sqrt(acc[k].var());
  if (tot > 0) {
    for (std::size_t k = 0; k < K; ++k) {
      double share = sampler.stratum_weight(k) * std::sqrt(acc[k].var()) / tot;
      extra[k] = static_cast<long>(std::floor(share * remaining));
    }
  } else {
    for (std::size_t k = 0; k < K; ++k)
      extra[k] = remaining / static_cast<long>(K);
  }

  // fixed chunking for deterministic threaded execution
  const long chunk = 65536;
  struct Task {
    std::size_t k;
    long i0, i1, slot;
  };
  std::vector<Task> tasks;
  long slot = 0;
  for (std::size_t k = 0; k < K; ++k) {
    long i0 = pilot_per, i1 = pilot_per + extra[k];
    for (long c = i0; c < i1; c += chunk)
      tasks.push_back({k, c, std::min(c + chunk, i1), slot++});
  }
  std::vector<detail::StratumAcc> slots(static_cast<std::size_t>(slot));

  const int nthreads = std::max(1, spec.threads);
  if (nthreads == 1 || tasks.size() <= 1) {
    for (const auto& t : tasks) run_range(t.k, t.i0, t.i1, slots[t.slot]);
  } else {
    std::exception_ptr eptr = nullptr;
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::mutex emtx;
    for (int w = 0; w < nthreads; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t ti = next.fetch_add(1);
          if (ti >= tasks.size()) return;
          try {
            run_range(tasks[ti].k, tasks[ti].i0, tasks[ti].i1,
                      slots[tasks[ti].slot]);
          } catch (...) {
            std::lock_guard<std::mutex> g(emtx);
            if (!eptr) eptr = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (eptr) std::rethrow_exception(eptr);
  }
  // merge chunk accumulators in slot order (fixed reduction tree)
  for (const auto& t : tasks) {
    acc[t.k].sum += slots[t.slot].sum;
    acc[t.k].sum2 += slots[t.slot].sum2;
    acc[t.k].n += slots[t.slot].n;
  }

  double value = 0, var = 0;
  long evals = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double w = sampler.stratum_weight(k);
    value += w * acc[k].mean();
    if (acc[k].n > 0) var += w * w * acc[k].var() / acc[k].n;
    evals += acc[k].n;
  }
  return Estimate{value, std::sqrt(var), evals, Method::mc};
}

}  // namespace fpl
