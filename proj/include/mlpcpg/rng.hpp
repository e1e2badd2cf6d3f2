#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mlpcpg/types.hpp"

namespace mlpcpg {

/// Deterministic random source. Gaussian sampling is done with an explicit
/// Box-Muller transform so that streams do not depend on the standard
/// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * canonical();
  }

  /// Uniform in [0, 1).
  double canonical() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = canonical();
    } while (u1 <= 0.0);
    const double u2 = canonical();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(kTwoPi * u2);
    have_spare_ = true;
    return mag * std::cos(kTwoPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>(canonical() * static_cast<double>(n));
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mlpcpg
