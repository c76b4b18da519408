#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cet {

// Deterministic random source.  All sampling used anywhere in the library
// (parameter init, data shuffling, augmentation, synthetic batches) goes
// through this class so that a seed fully pins every run.  The generator is
// std::mt19937_64 (the bit stream is specified by the standard); the
// transformations to floats are written out explicitly instead of relying on
// std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0.  Modulo bias is negligible for the
  // desk-scale n used here but we reject to keep draws exact.
  std::uint64_t randint(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via Box-Muller (polar form avoided to keep the draw count
  // per sample fixed).  One cached spare per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard log(0).
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;  // 2*pi
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Normal truncated to [-2, 2] standard deviations (resampling), then scaled.
  // Matches the usual transformer weight-init convention.
  double trunc_normal(double stddev) {
    double z = normal();
    while (z < -2.0 || z > 2.0) {
      has_spare_ = false;  // drop any cached spare so rejection is well-defined
      z = normal();
    }
    return z * stddev;
  }

  // Fisher-Yates; explicit so the permutation stream is pinned by the seed.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(randint(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cet
