/**
 * @file poly.hpp
 * @brief Sparse multivariate polynomials over real coefficients.
 *
 * Terms are kept in graded lexicographic order (lower total degree first; at
 * equal degree x1 > x2 > ... ). Coefficients with magnitude at or below
 * kPruneTolerance are dropped after every arithmetic operation.
 */
#pragma once

#include "mvsk/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mvsk {

inline constexpr double kPruneTolerance = 1e-14;

/// (variable, power) pairs sorted by variable, powers >= 1.
using Monomial = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

unsigned total_degree(const Monomial& m);

/// Monomial of a multiset of variable indices, e.g. {0, 0, 2} -> x0^2 x2.
Monomial monomial_from_indices(std::span<const std::size_t> indices);

struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

class SparsePolynomial {
 public:
  using Terms = std::map<Monomial, double, GradedLexLess>;

  explicit SparsePolynomial(std::size_t nvars = 0) : nvars_(nvars) {}

  static SparsePolynomial constant(std::size_t nvars, double c);
  static SparsePolynomial variable(std::size_t nvars, std::size_t i);
  /// @throws std::out_of_range if the monomial names a variable >= nvars
  static SparsePolynomial term(std::size_t nvars, Monomial m, double coefficient);

  std::size_t nvars() const { return nvars_; }
  const Terms& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  unsigned degree() const;
  double coefficient(const Monomial& m) const;

  /// @throws std::invalid_argument on dimension mismatch
  double eval(const Vector& x) const;
  SparsePolynomial derivative(std::size_t var) const;
  std::vector<SparsePolynomial> grad_exact() const;
  /// Central differences: (p(x + d e_i) - p(x - d e_i)) / (2d).
  /// @throws std::invalid_argument if delta <= 0
  Vector grad_numeric(const Vector& x, double delta = 0.01) const;

  /// One term per line: coefficient followed by the dense exponent vector.
  void dump(std::ostream& out) const;
  std::string dump() const;

 private:
  friend class PolynomialAccumulator;
  void add_term(const Monomial& m, double coefficient);
  void prune();

  std::size_t nvars_;
  Terms terms_;
};

SparsePolynomial add(const SparsePolynomial& p, const SparsePolynomial& q);
SparsePolynomial scale(const SparsePolynomial& p, double a);
SparsePolynomial mul(const SparsePolynomial& p, const SparsePolynomial& q);

inline SparsePolynomial operator+(const SparsePolynomial& p, const SparsePolynomial& q) {
  return add(p, q);
}
inline SparsePolynomial operator-(const SparsePolynomial& p, const SparsePolynomial& q) {
  return add(p, scale(q, -1.0));
}
inline SparsePolynomial operator*(const SparsePolynomial& p, const SparsePolynomial& q) {
  return mul(p, q);
}
inline SparsePolynomial operator*(double a, const SparsePolynomial& p) { return scale(p, a); }

/// Sums many scaled polynomials, optionally relabelling their variables, with
/// a single prune at the end.
class PolynomialAccumulator {
 public:
  explicit PolynomialAccumulator(std::size_t nvars) : result_(nvars) {}

  /// Adds a * p. If remap is non-empty, variable v of p becomes remap[v].
  void add(const SparsePolynomial& p, double a, std::span<const std::uint32_t> remap = {});
  void add_term(const Monomial& m, double coefficient);
  SparsePolynomial finish();

 private:
  SparsePolynomial result_;
};

/// Flattened evaluator for repeated value/gradient/Hessian queries.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const SparsePolynomial& p);

  std::size_t nvars() const { return nvars_; }
  double value(const Vector& x) const;
  double value_and_gradient(const Vector& x, Vector& grad) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;

 private:
  std::size_t nvars_ = 0;
  std::vector<double> coefficients_;
  std::vector<std::uint32_t> offsets_;  // term t uses vars_[offsets_[t]..offsets_[t+1])
  std::vector<std::uint32_t> vars_;     // variable multiset per term
};

}  // namespace mvsk
