#pragma once

#include <array>
#include <cmath>
#include <initializer_list>

#include "fpl/errors.hpp"

namespace fpl {

inline constexpr int kMaxDim = 8;

/// Fixed-capacity point in R^n, n <= kMaxDim.  Cheap to copy; no heap.
struct Vec {
  std::array<double, kMaxDim> c{};
  int dim = 0;

  Vec() = default;
  explicit Vec(int n) : dim(n) {
    if (n < 0 || n > kMaxDim) throw DomainError("Vec: dimension out of range");
  }
  Vec(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size())) {
    if (dim > kMaxDim) throw DomainError("Vec: dimension out of range");
    int i = 0;
    for (double x : xs) c[i++] = x;
  }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < dim; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (int i = 0; i < dim; ++i) c[i] *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double a, Vec v) { return v *= a; }

  double norm2() const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += c[i] * c[i];
    return s;
  }
  double norm() const { return std::sqrt(norm2()); }
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0;
  for (int i = 0; i < a.dim; ++i) s += a.c[i] * b.c[i];
  return s;
}

inline double dist(const Vec& a, const Vec& b) { return (a - b).norm(); }

/// First basis vector in R^n.
inline Vec basis_vec(int n, int axis = 0) {
  Vec e(n);
  e[axis] = 1.0;
  return e;
}

/// Lebesgue measure of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface measure of the unit sphere S^{n-1} in R^n (equals n * unit ball volume).
inline double unit_sphere_measure(int n) {
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace fpl
