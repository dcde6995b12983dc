#include "mvsk/random.hpp"

#include <cmath>

namespace mvsk {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ReturnMatrix generate_returns(std::size_t n, std::size_t T, std::uint64_t seed, double lo,
                              double hi) {
  if (n < 1) throw std::invalid_argument("generate_returns: n must be >= 1");
  if (T < 2) throw std::invalid_argument("generate_returns: T must be >= 2");
  if (!(lo < hi)) throw std::invalid_argument("generate_returns: need low < high");
  Rng rng(seed);
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));
  for (Eigen::Index t = 0; t < values.cols(); ++t)
    for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, t) = rng.uniform(lo, hi);
  return ReturnMatrix(std::move(values));
}

Vector random_binary_start(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_binary_start: n must be >= 1");
  Rng rng(seed);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(n));
  while (x.sum() == 0.0) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = (rng.next() >> 63) ? 1.0 : 0.0;
  }
  return x / x.sum();
}

Vector random_simplex_point(Rng& rng, std::size_t n) {
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = -std::log(1.0 - rng.uniform());
  return x / x.sum();
}

}  // namespace mvsk
