/**
 * @file subsolvers.hpp
 * @brief Feasible sets, Euclidean projections onto them, and a projected
 *     gradient minimizer for smooth convex subproblems.
 */
#pragma once

#include "mvsk/poly.hpp"
#include "mvsk/types.hpp"

#include <functional>
#include <vector>

namespace mvsk {

/// Sort-and-threshold projection onto {x >= 0, sum x = 1}. Coordinates in
/// (-1e-15, 0) are clamped to 0 and the result is renormalized.
/// @throws std::invalid_argument if y is empty or not finite
Vector project_simplex(const Vector& y);

/// Projection onto {x >= 0, sum x = 1, mu^T x = r} via a bisection on the
/// multiplier of the return constraint.
/// @throws std::invalid_argument if r is outside [min mu, max mu]
/// @throws std::runtime_error if the multiplier search does not converge
Vector project_simplex_with_return(const Vector& y, const Vector& mu, double r);

enum class SetKind { Simplex, SimplexWithReturn };

class FeasibleSet {
 public:
  static FeasibleSet simplex(std::size_t n);
  /// @throws std::invalid_argument if r is outside [min mu, max mu] (1e-12 slack)
  static FeasibleSet simplex_with_return(Vector mu, double r);

  SetKind kind() const { return kind_; }
  std::size_t dimension() const { return n_; }
  const Vector& mu() const { return mu_; }
  double target_return() const { return r_; }

  Vector project(const Vector& y) const;
  bool contains(const Vector& x, double tol = 1e-12) const;
  /// Vertices of the polytope (unit vectors for the plain simplex).
  std::vector<Vector> vertices() const;

 private:
  FeasibleSet(SetKind kind, std::size_t n, Vector mu, double r)
      : kind_(kind), n_(n), mu_(std::move(mu)), r_(r) {}

  SetKind kind_;
  std::size_t n_;
  Vector mu_;
  double r_ = 0.0;
};

/// argmin (eta/2)|x|^2 - <grad_val, x> over the set, i.e. project(grad_val / eta).
/// @throws std::invalid_argument if eta <= 0
Vector solve_quadratic_subproblem(const Vector& grad_val, double eta, const FeasibleSet& set);

/// Objective callback: returns phi(x) and writes its gradient.
using ValueGradient = std::function<double(const Vector& x, Vector& grad)>;

struct SubproblemResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;  ///< |x - project(x - grad phi(x))|
  bool converged = false;
};

/// Projected gradient with Barzilai-Borwein steps (clamped to [1e-8, 1e8]) and
/// backtracking along the projection arc, warm-started at x0. Iterates never
/// increase phi. Hitting max_iter is reported through `converged`.
/// @throws std::invalid_argument if x0 is not in the set (1e-9 slack)
/// @throws std::runtime_error if phi or its gradient is not finite
SubproblemResult minimize_convex_over_set(const ValueGradient& phi, const FeasibleSet& set,
                                          const Vector& x0, double tol = 1e-8,
                                          int max_iter = 5000);

/// phi(x) = G(x) - <linear, x>.
SubproblemResult minimize_convex_over_set(const CompiledPolynomial& G, const Vector& linear,
                                          const FeasibleSet& set, const Vector& x0,
                                          double tol = 1e-8, int max_iter = 5000);

}  // namespace mvsk
