#pragma once

#include <cmath>
#include <cstdint>

#include "fpl/geom.hpp"

namespace fpl {

/// Counter-based splittable generator.  A stream is keyed by
/// (seed, stream, index); the state evolves as a SplitMix64 sequence from the
/// mixed key, so any (stream, index) pair can be opened independently of all
/// others.  This is what makes stratified Monte Carlo bit-reproducible under
/// arbitrary thread scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    state_ = mix(mix(seed ^ 0x8badf00ddeadbeefULL) + stream);
    state_ = mix(state_ + 0x9e3779b97f4a7c15ULL * (index + 1));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in the open interval (0,1); never returns an exact endpoint.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform direction on S^{n-1}.
  Vec direction(int n) {
    Vec d(n);
    if (n == 1) {
      d[0] = uniform() < 0.5 ? -1.0 : 1.0;
      return d;
    }
    double r2 = 0;
    do {
      for (int i = 0; i < n; ++i) d[i] = normal();
      r2 = d.norm2();
    } while (r2 == 0.0);
    d *= 1.0 / std::sqrt(r2);
    return d;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace fpl
