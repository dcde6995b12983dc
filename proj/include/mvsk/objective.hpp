/**
 * @file objective.hpp
 * @brief The weighted MVSK objective f = -c1 m1 + c2 m2 - c3 m3 + c4 m4 as a
 *     sparse polynomial.
 */
#pragma once

#include "mvsk/moments.hpp"
#include "mvsk/poly.hpp"

#include <array>

namespace mvsk {

/// Nonnegative weights on (-m1, m2, -m3, m4).
struct Preference {
  std::array<double, 4> c{};

  Preference() = default;
  /// @throws std::invalid_argument if a weight is negative or not finite
  explicit Preference(std::array<double, 4> weights);
  Preference(double c1, double c2, double c3, double c4)
      : Preference(std::array<double, 4>{c1, c2, c3, c4}) {}

  double operator[](std::size_t i) const { return c[i]; }
};

/// m_order(x) for order 1..4 as a polynomial in n variables; the tensor
/// contractions are permutation-expanded.
SparsePolynomial moment_polynomial(const MomentTensors& tensors, unsigned order);

SparsePolynomial build_objective(const MomentTensors& tensors, const Preference& c);

/// f evaluated from portfolio_moments, without building a polynomial.
double objective_value(const MomentTensors& tensors, const Preference& c, const Vector& x);

}  // namespace mvsk
