#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cliquepart {

// Seeded generator with self-contained uniform/normal samplers.
// std:: distributions are implementation-defined, which would break
// bit-identical reproduction across standard libraries; the raw
// mt19937_64 stream itself is fully specified.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Widening-multiply map; bias is O(n/2^64).
  int uniform_int(int n) {
    const auto x = static_cast<unsigned __int128>(gen_());
    return static_cast<int>((x * static_cast<unsigned __int128>(n)) >> 64);
  }

  // Standard normal via Box-Muller; caches the second deviate.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 gen_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace cliquepart
