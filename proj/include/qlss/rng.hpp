#pragma once

#include "qlss/types.hpp"

#include <cmath>
#include <cstdint>

namespace qlss {

/// Deterministic pseudo-random source. Uniform doubles are produced from
/// the raw 64-bit stream and normals via Box-Muller, so the same seed gives
/// the same sequence on every platform (std::*_distribution does not
/// guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {
    // warm up so nearby seeds decorrelate
    for (int i = 0; i < 4; ++i) next();
  }

  std::uint64_t next() {
    // xorshift* variant
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  /// uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Complex complex_normal() {
    // isotropic standard complex Gaussian
    const double r = std::sqrt(0.5);
    return Complex(r * normal(), r * normal());
  }

 private:
  std::uint64_t state_;
};

/// Derive an independent per-stream seed from a master seed (splitmix64 on
/// the pair). Used so parallel trials are independent of worker count.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace qlss
