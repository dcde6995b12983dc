#include "mvsk/subsolvers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mvsk {

namespace {

constexpr double kClamp = 1e-15;
constexpr double kReturnSlack = 1e-12;

void clamp_and_normalize(Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0) x[i] = 0.0;  // threshold output is already >= 0 up to round-off
  }
  const double s = x.sum();
  if (s > 0.0) x /= s;
}

// Projection restricted to the coordinates in `support`; others are zero.
Vector project_onto_face(const Vector& y, const std::vector<Eigen::Index>& support) {
  Vector sub(static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) sub[static_cast<Eigen::Index>(k)] = y[support[k]];
  const Vector p = project_simplex(sub);
  Vector x = Vector::Zero(y.size());
  for (std::size_t k = 0; k < support.size(); ++k) x[support[k]] = p[static_cast<Eigen::Index>(k)];
  return x;
}

}  // namespace

Vector project_simplex(const Vector& y) {
  if (y.size() == 0) throw std::invalid_argument("project_simplex: empty vector");
  if (!y.allFinite()) throw std::invalid_argument("project_simplex: non-finite input");
  std::vector<double> u(y.data(), y.data() + y.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  Vector x = (y.array() - tau).max(0.0).matrix();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > -kClamp && x[i] < 0.0) x[i] = 0.0;
  }
  clamp_and_normalize(x);
  return x;
}

Vector project_simplex_with_return(const Vector& y, const Vector& mu, double r) {
  require_dimension(mu.size(), y.size(), "project_simplex_with_return");
  if (y.size() == 0) throw std::invalid_argument("project_simplex_with_return: empty vector");
  const double lo_mu = mu.minCoeff();
  const double hi_mu = mu.maxCoeff();
  if (r < lo_mu - kReturnSlack || r > hi_mu + kReturnSlack) {
    throw std::invalid_argument(
        fmt::format("target return {} outside [{}, {}]", r, lo_mu, hi_mu));
  }
  // Degenerate faces: the constraint pins the support to the extreme assets.
  auto extreme_face = [&](double value) {
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < mu.size(); ++i)
      if (mu[i] == value) support.push_back(i);
    return project_onto_face(y, support);
  };
  if (hi_mu - lo_mu <= 0.0) return project_simplex(y);
  if (r <= lo_mu) return extreme_face(lo_mu);
  if (r >= hi_mu) return extreme_face(hi_mu);

  // phi(lambda) = mu^T P(y - lambda mu) - r is nonincreasing in lambda.
  auto x_of = [&](double lambda) { return project_simplex(y - lambda * mu); };
  auto phi = [&](double lambda) { return mu.dot(x_of(lambda)) - r; };

  double lo = -1.0;
  double hi = 1.0;
  double phi_lo = phi(lo);
  double phi_hi = phi(hi);
  for (int k = 0; phi_lo < 0.0; ++k) {
    if (k > 200) throw std::runtime_error("project_simplex_with_return: cannot bracket multiplier");
    hi = lo;
    phi_hi = phi_lo;
    lo *= 2.0;
    phi_lo = phi(lo);
  }
  for (int k = 0; phi_hi > 0.0; ++k) {
    if (k > 200) throw std::runtime_error("project_simplex_with_return: cannot bracket multiplier");
    lo = hi;
    phi_lo = phi_hi;
    hi *= 2.0;
    phi_hi = phi(hi);
  }
  const double tol = 1e-14 * std::max(1.0, std::abs(r));
  for (int k = 0; k < 300 && hi - lo > 0.0; ++k) {
    if (phi_lo <= tol || -phi_hi <= tol) break;
    // secant inside the bracket, falling back to bisection on slow progress
    double mid = lo + phi_lo * (hi - lo) / (phi_lo - phi_hi);
    if (!(mid > lo && mid < hi) || k % 2 == 1) mid = 0.5 * (lo + hi);
    const double pm = phi(mid);
    if (pm > 0.0) {
      lo = mid;
      phi_lo = pm;
    } else {
      hi = mid;
      phi_hi = pm;
    }
  }
  const double lambda = phi_lo <= -phi_hi ? lo : hi;
  Vector x = x_of(lambda);
  if (std::abs(mu.dot(x) - r) > 1e-9 * std::max(1.0, std::abs(r))) {
    throw std::runtime_error("project_simplex_with_return: multiplier search did not converge");
  }
  return x;
}

FeasibleSet FeasibleSet::simplex(std::size_t n) {
  if (n == 0) throw std::invalid_argument("simplex dimension must be positive");
  return FeasibleSet(SetKind::Simplex, n, Vector(), 0.0);
}

FeasibleSet FeasibleSet::simplex_with_return(Vector mu, double r) {
  if (mu.size() == 0) throw std::invalid_argument("simplex dimension must be positive");
  if (!mu.allFinite() || !std::isfinite(r)) throw std::invalid_argument("non-finite return data");
  if (r < mu.minCoeff() - kReturnSlack || r > mu.maxCoeff() + kReturnSlack) {
    throw std::invalid_argument(fmt::format("target return {} outside [{}, {}]", r,
                                            mu.minCoeff(), mu.maxCoeff()));
  }
  const auto n = static_cast<std::size_t>(mu.size());
  return FeasibleSet(SetKind::SimplexWithReturn, n, std::move(mu), r);
}

Vector FeasibleSet::project(const Vector& y) const {
  require_dimension(y.size(), static_cast<Eigen::Index>(n_), "projection");
  return kind_ == SetKind::Simplex ? project_simplex(y) : project_simplex_with_return(y, mu_, r_);
}

bool FeasibleSet::contains(const Vector& x, double tol) const {
  if (x.size() != static_cast<Eigen::Index>(n_) || !x.allFinite()) return false;
  if (x.minCoeff() < -tol || std::abs(x.sum() - 1.0) > tol) return false;
  if (kind_ == SetKind::SimplexWithReturn && std::abs(mu_.dot(x) - r_) > tol) return false;
  return true;
}

std::vector<Vector> FeasibleSet::vertices() const {
  const auto n = static_cast<Eigen::Index>(n_);
  std::vector<Vector> out;
  if (kind_ == SetKind::Simplex) {
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(Vector::Unit(n, i));
    return out;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(mu_[i] - r_) <= kReturnSlack) out.push_back(Vector::Unit(n, i));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(mu_[i] < r_ - kReturnSlack && mu_[j] > r_ + kReturnSlack)) continue;
      const double t = (mu_[j] - r_) / (mu_[j] - mu_[i]);
      Vector v = Vector::Zero(n);
      v[i] = t;
      v[j] = 1.0 - t;
      out.push_back(std::move(v));
    }
  return out;
}

Vector solve_quadratic_subproblem(const Vector& grad_val, double eta, const FeasibleSet& set) {
  if (!(eta > 0.0)) throw std::invalid_argument("solve_quadratic_subproblem: eta must be positive");
  return set.project(grad_val / eta);
}

SubproblemResult minimize_convex_over_set(const ValueGradient& phi, const FeasibleSet& set,
                                          const Vector& x0, double tol, int max_iter) {
  if (!set.contains(x0, 1e-9)) throw std::invalid_argument("subproblem start point is infeasible");
  constexpr double kGamma = 1e-4;
  constexpr double kMinStep = 1e-8;
  constexpr double kMaxStep = 1e8;
  auto eval = [&phi](const Vector& x, Vector& g) {
    const double v = phi(x, g);
    if (!std::isfinite(v) || !g.allFinite()) {
      throw std::runtime_error("subproblem objective is not finite");
    }
    return v;
  };

  SubproblemResult res;
  res.x = set.project(x0);
  Vector g;
  double f = eval(res.x, g);
  double step = 1.0;
  Vector p, gp;
  for (res.iterations = 0;; ++res.iterations) {
    res.residual = (res.x - set.project(res.x - g)).norm();
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
    if (res.iterations >= max_iter) break;

    double s = step;
    bool accepted = false;
    double fp = f;
    // Steps keep sum(x) fixed, so gradients may be shifted by a constant; the
    // shift removes round-off of sum(dx) from the slopes.
    const double shift = g.dot(res.x);
    for (int bt = 0; bt < 60; ++bt) {
      p = set.project(res.x - s * g);
      const Vector dx = p - res.x;
      if (dx.squaredNorm() == 0.0) break;
      const double slope = g.dot(dx) - shift * dx.sum();
      fp = eval(p, gp);
      // Either the values show sufficient decrease, or convexity certifies it
      // (phi(p) - phi(x) <= <grad phi(p), p - x>).
      if (fp <= f + kGamma * slope || gp.dot(dx) - shift * dx.sum() <= kGamma * slope) {
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;  // no representable progress; report the residual as is

    const Vector sx = p - res.x;
    const Vector sg = gp - g;
    const double sy = sx.dot(sg);
    step = sy > 0.0 ? std::clamp(sx.squaredNorm() / sy, kMinStep, kMaxStep)
                    : std::min(kMaxStep, 2.0 * s);
    if (fp > f) fp = f;  // certified step; round-off only
    res.x = p;
    g = gp;
    f = fp;
  }
  return res;
}

SubproblemResult minimize_convex_over_set(const CompiledPolynomial& G, const Vector& linear,
                                          const FeasibleSet& set, const Vector& x0, double tol,
                                          int max_iter) {
  require_dimension(linear.size(), static_cast<Eigen::Index>(G.nvars()), "subproblem linear term");
  const ValueGradient phi = [&](const Vector& x, Vector& grad) {
    const double v = G.value_and_gradient(x, grad) - linear.dot(x);
    grad -= linear;
    return v;
  };
  return minimize_convex_over_set(phi, set, x0, tol, max_iter);
}

}  // namespace mvsk
