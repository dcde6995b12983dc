/**
 * @file random.hpp
 * @brief Portable seeded sampling for synthetic instances.
 *
 * The generator is std::mt19937_64, whose output sequence is fixed by the
 * standard. Uniform doubles take the top 53 bits of each draw, so results do
 * not depend on the standard library's distribution implementations.
 */
#pragma once

#include "mvsk/moments.hpp"

#include <cstdint>
#include <random>

namespace mvsk {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent stream seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// n assets over T periods, i.i.d. uniform in [lo, hi). Periods are drawn in
/// order, assets within a period.
ReturnMatrix generate_returns(std::size_t n, std::size_t T, std::uint64_t seed, double lo = -0.1,
                              double hi = 0.4);

/// Draws x from {0,1}^n (redrawing the all-zero vector) and normalizes it
/// onto the simplex: k ones become weights 1/k.
Vector random_binary_start(std::size_t n, std::uint64_t seed);

/// Uniform point on the simplex (normalized exponential spacings).
Vector random_simplex_point(Rng& rng, std::size_t n);

}  // namespace mvsk
