#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsk/subsolvers.hpp"
#include "mvsk/random.hpp"
#include "support/oracles.hpp"

using namespace mvsk;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

void check_on_simplex(const Vector& x) {
  CHECK(x.minCoeff() >= 0.0);
  CHECK(std::abs(x.sum() - 1.0) <= 1e-14);
}

}  // namespace

TEST_CASE("simplex projection examples") {
  CHECK((project_simplex(vec({0.5, 0.5})) - vec({0.5, 0.5})).norm() == 0.0);
  CHECK((project_simplex(vec({2.0, 0.0})) - vec({1.0, 0.0})).norm() == 0.0);
  CHECK((project_simplex(vec({0.3, 0.3, 0.3})) - Vector::Constant(3, 1.0 / 3.0)).norm() <= 1e-15);
  CHECK_THROWS_AS(project_simplex(Vector()), std::invalid_argument);
  CHECK_THROWS_AS(project_simplex(vec({1.0, std::nan("")})), std::invalid_argument);
}

TEST_CASE("simplex projection matches active-set enumeration") {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<Eigen::Index>(1 + rep % 5);
    const Vector y = oracle::random_box_point(rng, n, -2.0, 2.0);
    const Vector x = project_simplex(y);
    const Vector ref = oracle::enumerate_projection(y);
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-10);
    check_on_simplex(x);

    // threshold form x_i = max(y_i - tau, 0)
    double tau = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (x[i] > 0.0) tau = y[i] - x[i];
    for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(x[i] - std::max(y[i] - tau, 0.0)) <= 1e-12);
  }
}

TEST_CASE("projection properties") {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<Eigen::Index>(2 + rep % 9);
    const Vector y1 = oracle::random_box_point(rng, n, -3.0, 3.0);
    const Vector y2 = oracle::random_box_point(rng, n, -3.0, 3.0);
    const Vector p1 = project_simplex(y1);
    const Vector p2 = project_simplex(y2);
    CHECK((project_simplex(p1) - p1).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((p1 - p2).norm() <= (y1 - y2).norm() + 1e-14);
    check_on_simplex(p1);
  }
}

TEST_CASE("return-constrained projection examples") {
  const Vector mu = vec({0.0, 1.0});
  CHECK((project_simplex_with_return(vec({0.5, 0.5}), mu, 0.5) - vec({0.5, 0.5})).norm() <= 1e-14);
  CHECK((project_simplex_with_return(vec({0.8, 0.3}), mu, 1.0) - vec({0.0, 1.0})).norm() == 0.0);
  CHECK((project_simplex_with_return(vec({0.8, 0.3}), mu, 0.0) - vec({1.0, 0.0})).norm() == 0.0);
  CHECK_THROWS_AS(project_simplex_with_return(vec({0.5, 0.5}), mu, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(project_simplex_with_return(vec({0.5, 0.5}), mu, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(project_simplex_with_return(vec({0.5, 0.5}), vec({0.0}), 0.0), std::invalid_argument);

  // equal returns reduce to the plain projection
  const Vector flat = Vector::Constant(3, 0.2);
  const Vector y = vec({0.9, -0.2, 0.4});
  CHECK((project_simplex_with_return(y, flat, 0.2) - project_simplex(y)).norm() == 0.0);
}

TEST_CASE("return-constrained projection matches active-set enumeration") {
  Rng rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = static_cast<Eigen::Index>(2 + rep % 4);
    const Vector mu = oracle::random_box_point(rng, n, -0.1, 0.4);
    const double r = rng.uniform(mu.minCoeff(), mu.maxCoeff());
    const Vector y = oracle::random_box_point(rng, n, -1.0, 1.0);
    const Vector x = project_simplex_with_return(y, mu, r);
    const Vector ref = oracle::enumerate_projection(y, mu, r);
    REQUIRE(ref.size() == n);
    CHECK((x - ref).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(mu.dot(x) - r) <= 1e-9);
    check_on_simplex(x);
  }
}

TEST_CASE("feasible sets") {
  const auto s = FeasibleSet::simplex(3);
  CHECK(s.kind() == SetKind::Simplex);
  CHECK(s.contains(vec({0.2, 0.3, 0.5})));
  CHECK_FALSE(s.contains(vec({0.2, 0.3, 0.6})));
  CHECK_FALSE(s.contains(vec({-0.1, 0.6, 0.5})));
  CHECK_FALSE(s.contains(vec({0.5, 0.5})));
  CHECK(s.vertices().size() == 3);
  CHECK_THROWS_AS(FeasibleSet::simplex(0), std::invalid_argument);
  CHECK_THROWS_AS(s.project(vec({1.0})), std::invalid_argument);

  const Vector mu = vec({0.0, 0.1, 0.3});
  const auto sr = FeasibleSet::simplex_with_return(mu, 0.1);
  CHECK(sr.contains(vec({0.0, 1.0, 0.0})));
  CHECK_FALSE(sr.contains(vec({1.0, 0.0, 0.0})));
  // vertices: e_2 itself and the edge point between assets 1 and 3
  const auto v = sr.vertices();
  REQUIRE(v.size() == 2);
  for (const auto& z : v) CHECK(sr.contains(z));
  CHECK_THROWS_AS(FeasibleSet::simplex_with_return(mu, 0.5), std::invalid_argument);
}

TEST_CASE("quadratic subproblem") {
  const auto s = FeasibleSet::simplex(4);
  CHECK((solve_quadratic_subproblem(Vector::Zero(4), 3.0, s) - Vector::Constant(4, 0.25)).norm() <= 1e-15);
  const Vector g = vec({0.3, -1.0, 2.0, 0.1});
  CHECK((solve_quadratic_subproblem(2.0 * g, 2.0 * 5.0, s) - solve_quadratic_subproblem(g, 5.0, s)).norm() ==
        0.0);
  CHECK_THROWS_AS(solve_quadratic_subproblem(g, 0.0, s), std::invalid_argument);

  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector lin = oracle::random_box_point(rng, 5, -1.0, 1.0);
    const double eta = rng.uniform(0.5, 5.0);
    const auto set = FeasibleSet::simplex(5);
    const ValueGradient phi = [&](const Vector& x, Vector& grad) {
      grad = eta * x - lin;
      return 0.5 * eta * x.squaredNorm() - lin.dot(x);
    };
    const auto res = minimize_convex_over_set(phi, set, Vector::Constant(5, 0.2), 1e-10, 5000);
    CHECK(res.converged);
    CHECK((res.x - solve_quadratic_subproblem(lin, eta, set)).norm() <= 1e-7);
  }
}

TEST_CASE("projected gradient minimizer") {
  const auto s = FeasibleSet::simplex(6);
  const ValueGradient half_norm = [](const Vector& x, Vector& grad) {
    grad = x;
    return 0.5 * x.squaredNorm();
  };
  const auto res = minimize_convex_over_set(half_norm, s, Vector::Unit(6, 2));
  CHECK(res.converged);
  CHECK((res.x - Vector::Constant(6, 1.0 / 6.0)).norm() <= 1e-8);
  CHECK_THROWS_AS(minimize_convex_over_set(half_norm, s, Vector::Zero(6)), std::invalid_argument);

  const ValueGradient broken = [](const Vector& x, Vector& grad) {
    grad = x;
    return std::numeric_limits<double>::infinity();
  };
  CHECK_THROWS_AS(minimize_convex_over_set(broken, s, Vector::Unit(6, 0)), std::runtime_error);
}

TEST_CASE("minimizer against a grid search on n = 2") {
  Rng rng(5);
  const auto s = FeasibleSet::simplex(2);
  for (int rep = 0; rep < 5; ++rep) {
    // convex quartic: sum of a_i x_i^4 + b (x_1 + c x_2)^2 + linear
    const double a0 = rng.uniform(0.1, 3), a1 = rng.uniform(0.1, 3), b = rng.uniform(0, 2),
                 c = rng.uniform(-1, 1), l0 = rng.uniform(-1, 1), l1 = rng.uniform(-1, 1);
    const oracle::ScalarFn f = [=](const Vector& x) {
      const double u = x[0] + c * x[1];
      return a0 * std::pow(x[0], 4) + a1 * std::pow(x[1], 4) + b * u * u + l0 * x[0] + l1 * x[1];
    };
    const ValueGradient phi = [=](const Vector& x, Vector& grad) {
      const double u = x[0] + c * x[1];
      grad.resize(2);
      grad[0] = 4 * a0 * std::pow(x[0], 3) + 2 * b * u + l0;
      grad[1] = 4 * a1 * std::pow(x[1], 3) + 2 * b * c * u + l1;
      return f(x);
    };
    const auto res = minimize_convex_over_set(phi, s, Vector::Unit(2, 0));
    const auto grid = oracle::grid_search_segment(f);
    CHECK(f(res.x) <= grid.value + 1e-5);
    CHECK(f(res.x) >= grid.value - 1e-5);
  }
}

TEST_CASE("minimizer optimality certificate") {
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::Index n = 3 + rep % 6;
    Matrix A = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rng.uniform(-1, 1);
    const Matrix Q = A.transpose() * A;
    const Vector lin = oracle::random_box_point(rng, n, -1, 1);
    const Vector w = oracle::random_box_point(rng, n, 0.1, 1.0);
    // phi = 1/2 x'Qx + sum w_i x_i^4 - lin'x
    const ValueGradient phi = [&](const Vector& x, Vector& grad) {
      grad = Q * x + 4.0 * w.cwiseProduct(x.array().cube().matrix()) - lin;
      return 0.5 * x.dot(Q * x) + w.dot(x.array().pow(4).matrix()) - lin.dot(x);
    };
    const auto set = FeasibleSet::simplex(static_cast<std::size_t>(n));
    const double tol = 1e-8;
    const auto res = minimize_convex_over_set(phi, set, set.project(Vector::Ones(n)), tol, 5000);
    CHECK(res.converged);
    CHECK(set.contains(res.x));
    Vector g;
    phi(res.x, g);
    for (const auto& z : set.vertices()) CHECK(g.dot(z - res.x) >= -10.0 * tol);

    // same problem over the return-constrained set
    const Vector mu = oracle::random_box_point(rng, n, -0.1, 0.4);
    const double r = 0.5 * (mu.minCoeff() + mu.maxCoeff());
    const auto rset = FeasibleSet::simplex_with_return(mu, r);
    const auto rres = minimize_convex_over_set(phi, rset, rset.project(Vector::Zero(n)), tol, 5000);
    CHECK(rres.converged);
    CHECK(rset.contains(rres.x, 1e-10));
    phi(rres.x, g);
    for (const auto& z : rset.vertices()) CHECK(g.dot(z - rres.x) >= -10.0 * tol);
  }
}

TEST_CASE("minimizer over a compiled polynomial") {
  SparsePolynomial G(3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto xi = SparsePolynomial::variable(3, i);
    G = G + 0.5 * xi * xi;
  }
  const Vector lin = vec({0.2, 0.0, -0.1});
  const auto set = FeasibleSet::simplex(3);
  const auto res = minimize_convex_over_set(CompiledPolynomial(G), lin, set, Vector::Unit(3, 2));
  CHECK(res.converged);
  CHECK((res.x - solve_quadratic_subproblem(lin, 1.0, set)).norm() <= 1e-7);
  CHECK_THROWS_AS(minimize_convex_over_set(CompiledPolynomial(G), Vector::Zero(2), set, Vector::Unit(3, 0)),
                  std::invalid_argument);
}
