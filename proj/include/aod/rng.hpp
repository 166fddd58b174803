// SPDX-License-Identifier: Apache-2.0
#ifndef AOD_RNG_HPP
#define AOD_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace aod {

/// One round of the splitmix64 output function over a fixed state.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministic seed derivation for sub-streams: hash(master, a[, b]).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(master ^ 0xA02BDBF7BB3C0A7ull) ^ mix64(a) ^ (mix64(b) << 1));
}

/// Seeded random stream with splittable sub-streams.
///
/// Gaussian deviates are produced by an explicit Box-Muller transform on
/// top of mt19937_64 so that a given seed reproduces the same byte-exact
/// sequence on every standard library (std::normal_distribution is
/// implementation-defined and would break reproducible sweeps).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent stream derived from this stream's seed and the given indices.
  Rng substream(std::uint64_t a, std::uint64_t b = 0) const {
    return Rng(derive_seed(seed_, a, b));
  }

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free modulo bias is negligible for n << 2^64; keep it exact anyway.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t x = eng_();
    while (x > limit) x = eng_();
    return x % n;
  }

  /// Standard normal N(0, 1), Box-Muller with cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    have_spare_ = true;
    return r * std::cos(t);
  }

  /// Circularly symmetric complex normal CN(0, 1):
  /// real and imaginary parts are independent N(0, 1/2).
  std::complex<double> cnormal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace aod

#endif  // AOD_RNG_HPP
