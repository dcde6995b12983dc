#include "mvsk/objective.hpp"

#include <cmath>

namespace mvsk {

Preference::Preference(std::array<double, 4> weights) : c(weights) {
  for (double w : c) {
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("preference weights must be finite and nonnegative");
    }
  }
}

SparsePolynomial moment_polynomial(const MomentTensors& tensors, unsigned order) {
  const auto n = tensors.assets();
  PolynomialAccumulator acc(n);
  switch (order) {
    case 1:
      for (std::size_t i = 0; i < n; ++i) {
        const std::array<std::size_t, 1> idx{i};
        acc.add_term(monomial_from_indices(idx), tensors.mu()[static_cast<Eigen::Index>(i)]);
      }
      break;
    case 2:
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
          const std::array<std::size_t, 2> idx{i, j};
          acc.add_term(monomial_from_indices(idx),
                       permutation_multiplicity(idx) * tensors.sigma(i, j));
        }
      break;
    case 3:
      tensors.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
        const std::array<std::size_t, 3> idx{i, j, k};
        acc.add_term(monomial_from_indices(idx), permutation_multiplicity(idx) * s);
      });
      break;
    case 4:
      tensors.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                                double v) {
        const std::array<std::size_t, 4> idx{i, j, k, l};
        acc.add_term(monomial_from_indices(idx), permutation_multiplicity(idx) * v);
      });
      break;
    default:
      throw std::invalid_argument("moment order must be 1..4");
  }
  return acc.finish();
}

SparsePolynomial build_objective(const MomentTensors& tensors, const Preference& c) {
  static constexpr double kSign[4] = {-1.0, 1.0, -1.0, 1.0};
  PolynomialAccumulator acc(tensors.assets());
  for (unsigned r = 0; r < 4; ++r) {
    if (c[r] == 0.0) continue;
    acc.add(moment_polynomial(tensors, r + 1), kSign[r] * c[r]);
  }
  return acc.finish();
}

double objective_value(const MomentTensors& tensors, const Preference& c, const Vector& x) {
  const auto m = portfolio_moments(tensors, x);
  return -c[0] * m.m1 + c[1] * m.m2 - c[2] * m.m3 + c[3] * m.m4;
}

}  // namespace mvsk
