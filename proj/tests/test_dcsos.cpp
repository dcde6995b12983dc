#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mvsk/dcsos.hpp"
#include "mvsk/random.hpp"
#include "support/oracles.hpp"

using namespace mvsk;

namespace {

SparsePolynomial var(std::size_t n, std::size_t i) { return SparsePolynomial::variable(n, i); }

bool same_polynomial(const SparsePolynomial& a, const SparsePolynomial& b) { return (a - b).empty(); }

double value(const ConvexComponent& c, const Vector& x) { return c.value.eval(x); }

void check_identity(const DcPair& p, Rng& rng, double lo, double hi, double tol, int points = 100) {
  const auto n = static_cast<Eigen::Index>(p.nvars());
  for (int k = 0; k < points; ++k) {
    const Vector x = oracle::random_box_point(rng, n, lo, hi);
    const double t = p.target.eval(x);
    CHECK(std::abs(value(p.g, x) - value(p.h, x) - t) <= tol * (1.0 + std::abs(t)));
  }
}

void check_convex(const SparsePolynomial& p, Rng& rng, double lo, double hi, int points = 50) {
  if (p.empty()) return;
  const CompiledPolynomial c(p);
  const auto n = static_cast<Eigen::Index>(p.nvars());
  for (int k = 0; k < points; ++k) {
    const Vector x = oracle::random_box_point(rng, n, lo, hi);
    const Matrix H = c.hessian(x);
    CHECK(oracle::min_eigenvalue(H) >= -1e-8 * std::max(1.0, H.norm()));
  }
}

MomentTensors random_tensors(std::size_t n, std::uint64_t seed) {
  return MomentTensors::from_returns(generate_returns(n, 30, seed));
}

MomentTensors single_asset(double s, double k) {
  Matrix sigma(1, 1);
  sigma << 1.0;
  return MomentTensors::from_functions(
      Vector::Ones(1), sigma, [s](std::size_t, std::size_t, std::size_t) { return s; },
      [k](std::size_t, std::size_t, std::size_t, std::size_t) { return k; });
}

MomentTensors zero_higher(std::size_t n) {
  return MomentTensors::from_functions(
      Vector::LinSpaced(static_cast<Eigen::Index>(n), 0.1, 0.3),
      Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
      [](std::size_t, std::size_t, std::size_t) { return 0.0; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return 0.0; });
}

Monomial mono(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> m) { return Monomial(m); }

}  // namespace

TEST_CASE("bilinear split") {
  const auto p = decompose_bilinear(2, 0, 1);
  Vector x(2);
  x << 1.0, 2.0;
  CHECK(value(p.g, x) == doctest::Approx(2.25).epsilon(1e-15));
  CHECK(value(p.h, x) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.target.eval(x) == 2.0);
  x << 0.7, 0.7;
  CHECK(std::abs(value(p.h, x)) < 1e-16);
  CHECK(value(p.g, x) == doctest::Approx(0.49).epsilon(1e-15));
  CHECK(p.domain() == Domain::AllSpace);
  CHECK_THROWS_AS(decompose_bilinear(3, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(decompose_bilinear_alt(3, 2, 2), std::invalid_argument);

  Rng rng(1);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      if (i == j) continue;
      for (const auto& q : {decompose_bilinear(5, i, j), decompose_bilinear_alt(5, i, j)}) {
        for (int k = 0; k < 100; ++k) {
          const Vector z = oracle::random_box_point(rng, 5, -1.0, 1.0);
          CHECK(std::abs(value(q.g, z) - value(q.h, z) - z[i] * z[j]) <= 1e-12);
        }
        check_convex(q.g.value, rng, -1, 1, 5);
        check_convex(q.h.value, rng, -1, 1, 5);
      }
    }
}

TEST_CASE("elementary pairs") {
  const auto sq = decompose_even_power(3, 1, 4);
  CHECK(sq.h.value.empty());
  CHECK(sq.g.value.coefficient(mono({{1, 4}})) == 1.0);
  CHECK_THROWS(decompose_even_power(3, 1, 3));

  Rng rng(2);
  const auto u = var(3, 0) + 2.0 * var(3, 2);
  const auto v = var(3, 1) * var(3, 1);
  const auto dos = difference_of_squares(u, v);
  CHECK(same_polynomial(dos.target, 4.0 * u * v));
  check_identity(dos, rng, -1, 1, 1e-12);

  const auto scaled = scale_pair(decompose_bilinear(3, 0, 2), 2.5);
  CHECK(same_polynomial(scaled.target, 2.5 * var(3, 0) * var(3, 2)));
  CHECK_THROWS(scale_pair(scaled, -1.0));

  const auto t = trivial_pair(var(2, 0) * var(2, 0), Domain::NonnegOrthant);
  CHECK(t.domain() == Domain::NonnegOrthant);
  CHECK(t.h.value.empty());
}

TEST_CASE("product of pairs") {
  Rng rng(3);
  const auto t = var(2, 0) * var(2, 0) + var(2, 1) * var(2, 1);
  const auto tp = decompose_product(trivial_pair(t, Domain::AllSpace), trivial_pair(t, Domain::AllSpace));
  CHECK(same_polynomial(tp.target, t * t));
  check_identity(tp, rng, -1, 1, 1e-12);

  const auto zero = trivial_pair(SparsePolynomial(2), Domain::AllSpace);
  const auto zp = decompose_product(zero, decompose_bilinear(2, 0, 1));
  CHECK(zp.target.empty());
  check_identity(zp, rng, -1, 1, 1e-12);

  const auto bb = decompose_product(decompose_bilinear(4, 0, 1), decompose_bilinear(4, 2, 3));
  CHECK(same_polynomial(bb.target, var(4, 0) * var(4, 1) * var(4, 2) * var(4, 3)));
  check_identity(bb, rng, -1, 1, 1e-10);
  check_convex(bb.g.value, rng, -1, 1);
  check_convex(bb.h.value, rng, -1, 1);

  CHECK_THROWS_AS(decompose_product(decompose_bilinear(2, 0, 1), decompose_bilinear(3, 0, 1)),
                  std::invalid_argument);
  CHECK(intersect(Domain::AllSpace, Domain::NonnegOrthant) == Domain::NonnegOrthant);
  CHECK(intersect(Domain::AllSpace, Domain::AllSpace) == Domain::AllSpace);
}

TEST_CASE("monomial splits") {
  Rng rng(4);
  for (auto shape : kAllShapes) {
    CAPTURE(to_string(shape));
    const auto& p = monomial_split(shape);
    const auto n = role_count(shape);
    CHECK(p.nvars() == n);
    // the target is the monomial named by the shape
    std::vector<std::size_t> idx;
    switch (shape) {
      case MonomialShape::Cube: idx = {0, 0, 0}; break;
      case MonomialShape::SquareLinear: idx = {0, 0, 1}; break;
      case MonomialShape::Trilinear: idx = {0, 1, 2}; break;
      case MonomialShape::Quartic: idx = {0, 0, 0, 0}; break;
      case MonomialShape::SquareSquare: idx = {0, 0, 1, 1}; break;
      case MonomialShape::CubeLinear: idx = {0, 0, 0, 1}; break;
      case MonomialShape::SquareBilinear: idx = {0, 0, 1, 2}; break;
      case MonomialShape::Quadrilinear: idx = {0, 1, 2, 3}; break;
    }
    CHECK(same_polynomial(p.target, SparsePolynomial::term(n, monomial_from_indices(idx), 1.0)));
    CHECK(same_polynomial(p.g.value - p.h.value, p.target));
    CHECK(p.domain() == (shape == MonomialShape::Cube ? Domain::NonnegOrthant : Domain::AllSpace));
    const double lo = shape == MonomialShape::Cube ? 0.0 : -1.0;
    check_identity(p, rng, lo, 1.0, 1e-12);
    check_convex(p.g.value, rng, lo, 1.0);
    check_convex(p.h.value, rng, lo, 1.0);

    const auto g = p.g.value.grad_exact();
    const auto h = p.h.value.grad_exact();
    REQUIRE(p.g.grad.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(same_polynomial(p.g.grad[i], g[i]));
      CHECK(same_polynomial(p.h.grad[i], h[i]));
    }
  }
}

TEST_CASE("closed-form gradients match formal differentiation") {
  for (auto shape : kAllShapes) {
    CAPTURE(to_string(shape));
    const auto& p = monomial_split(shape);
    const auto [cg, ch] = closed_form_gradients(shape);
    const auto g = p.g.value.grad_exact();
    const auto h = p.h.value.grad_exact();
    REQUIRE(cg.size() == g.size());
    REQUIRE(ch.size() == h.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      CAPTURE(i);
      CHECK(same_polynomial(cg[i], g[i]));
      CHECK(same_polynomial(ch[i], h[i]));
    }
  }
}

TEST_CASE("classification of index tuples") {
  auto shape_of = [](std::vector<std::size_t> idx) { return classify(idx); };
  using S = MonomialShape;
  CHECK(shape_of({2, 2, 2}).first == S::Cube);
  auto [s1, r1] = shape_of({1, 1, 3});
  CHECK(s1 == S::SquareLinear);
  CHECK((r1[0] == 1 && r1[1] == 3));
  auto [s2, r2] = shape_of({0, 3, 3});
  CHECK(s2 == S::SquareLinear);
  CHECK((r2[0] == 3 && r2[1] == 0));
  CHECK(shape_of({0, 1, 2}).first == S::Trilinear);
  CHECK(shape_of({1, 1, 1, 1}).first == S::Quartic);
  auto [s3, r3] = shape_of({0, 2, 2, 2});
  CHECK(s3 == S::CubeLinear);
  CHECK((r3[0] == 2 && r3[1] == 0));
  CHECK(shape_of({0, 0, 0, 1}).first == S::CubeLinear);
  CHECK(shape_of({0, 0, 3, 3}).first == S::SquareSquare);
  auto [s4, r4] = shape_of({0, 1, 1, 3});
  CHECK(s4 == S::SquareBilinear);
  CHECK((r4[0] == 1 && r4[1] == 0 && r4[2] == 3));
  auto [s5, r5] = shape_of({0, 1, 3, 3});
  CHECK(s5 == S::SquareBilinear);
  CHECK((r5[0] == 3 && r5[1] == 0 && r5[2] == 1));
  CHECK(shape_of({0, 1, 2, 3}).first == S::Quadrilinear);
}

TEST_CASE("sign routing covers every nonzero entry once") {
  for (std::size_t n : {1u, 2u, 3u, 4u}) {
    const auto t = random_tensors(n, 40 + n);
    for (unsigned order : {3u, 4u}) {
      const auto entries = route_entries(t, order);
      std::size_t nonzero = 0;
      auto count = [&](double v) { nonzero += v != 0.0; };
      if (order == 3)
        t.for_each_skew([&](std::size_t, std::size_t, std::size_t, double v) { count(v); });
      else
        t.for_each_kurt([&](std::size_t, std::size_t, std::size_t, std::size_t, double v) { count(v); });
      CHECK(entries.size() == nonzero);

      // rebuilding from the routed entries reproduces m3/m4 coefficient by coefficient
      PolynomialAccumulator acc(n);
      for (const auto& e : entries) {
        CHECK(e.weight != 0.0);
        const auto& split = monomial_split(e.shape);
        std::vector<std::uint32_t> remap(e.roles.begin(), e.roles.begin() + role_count(e.shape));
        acc.add(split.target, e.weight, remap);
      }
      const auto rebuilt = acc.finish();
      const auto ref = moment_polynomial(t, order);
      CHECK(rebuilt.term_count() == ref.term_count());
      for (const auto& [m, c] : ref.terms()) CHECK(rebuilt.coefficient(m) == doctest::Approx(c).epsilon(1e-14));
    }
  }
}

TEST_CASE("m3 pair") {
  const auto zero = zero_higher(3);
  const auto z3 = build_m3_pair(zero);
  CHECK(z3.g.value.empty());
  CHECK(z3.h.value.empty());

  const auto neg = build_m3_pair(single_asset(-2.0, 1.0));
  CHECK(neg.g.value.empty());
  CHECK(neg.h.value.term_count() == 1);
  CHECK(neg.h.value.coefficient(mono({{0, 3}})) == 2.0);
  CHECK(neg.domain() == Domain::NonnegOrthant);

  Rng rng(5);
  for (std::uint64_t seed : {1u, 2u}) {
    const auto t = random_tensors(4, seed);
    const auto p = build_m3_pair(t);
    CHECK(p.domain() == Domain::NonnegOrthant);
    for (int k = 0; k < 100; ++k) {
      const Vector x = oracle::random_box_point(rng, 4, 0.0, 1.0);
      const double m3 = portfolio_moments(t, x).m3;
      CHECK(std::abs(p.g.value.eval(x) - p.h.value.eval(x) - m3) <= 1e-9 * (1.0 + std::abs(m3)));
    }
    check_convex(p.g.value, rng, 0, 1, 100);
    check_convex(p.h.value, rng, 0, 1, 100);
  }
}

TEST_CASE("m4 pair") {
  const auto z4 = build_m4_pair(zero_higher(2));
  CHECK(z4.g.value.empty());
  CHECK(z4.h.value.empty());

  const auto pos = build_m4_pair(single_asset(1.0, 3.0));
  CHECK(pos.h.value.empty());
  CHECK(pos.g.value.term_count() == 1);
  CHECK(pos.g.value.coefficient(mono({{0, 4}})) == 3.0);
  CHECK(pos.domain() == Domain::AllSpace);

  Rng rng(6);
  for (std::uint64_t seed : {3u, 4u}) {
    const auto t = random_tensors(4, seed);
    const auto p = build_m4_pair(t);
    for (int k = 0; k < 100; ++k) {
      const Vector x = oracle::random_box_point(rng, 4, -1.0, 1.0);
      const double m4 = portfolio_moments(t, x).m4;
      CHECK(std::abs(p.g.value.eval(x) - p.h.value.eval(x) - m4) <= 1e-9 * (1.0 + std::abs(m4)));
    }
    check_convex(p.g.value, rng, -1, 1, 100);
    check_convex(p.h.value, rng, -1, 1, 100);
  }
}

TEST_CASE("finite-difference convexity of the assembled components") {
  Rng rng(7);
  const auto t = random_tensors(3, 9);
  const auto p = assemble_G_H(t, Preference(10, 1, 10, 1));
  for (const auto* poly : {&p.g.value, &p.h.value}) {
    for (int k = 0; k < 50; ++k) {
      const Vector x = oracle::random_box_point(rng, 3, 0.0, 1.0);
      const Matrix H = oracle::fd_hessian([&](const Vector& z) { return poly->eval(z); }, x, 1e-3);
      CHECK(oracle::min_eigenvalue(H) >= -1e-6);
    }
  }
}

TEST_CASE("assembled G and H") {
  const auto t = random_tensors(4, 8);
  const auto convex = assemble_G_H(t, Preference(1, 1, 0, 0));
  CHECK(convex.h.value.empty());
  CHECK(same_polynomial(convex.g.value, moment_polynomial(t, 2) - moment_polynomial(t, 1)));

  const auto quartic = assemble_G_H(t, Preference(0, 0, 0, 1));
  const auto m4 = build_m4_pair(t);
  CHECK(same_polynomial(quartic.g.value, m4.g.value));
  CHECK(same_polynomial(quartic.h.value, m4.h.value));
  CHECK(quartic.domain() == Domain::NonnegOrthant);

  Rng rng(8);
  for (std::size_t n : {4u, 6u}) {
    const auto tn = random_tensors(n, 20 + n);
    for (const auto& c : {Preference(10, 1, 10, 1), Preference(1, 10, 1, 10), Preference(10, 10, 10, 10)}) {
      const auto p = assemble_G_H(tn, c);
      const auto f = build_objective(tn, c);
      CHECK(same_polynomial(p.target, f));
      for (int k = 0; k < 100; ++k) {
        const Vector x = random_simplex_point(rng, n);
        const double fx = f.eval(x);
        CHECK(std::abs(p.g.value.eval(x) - p.h.value.eval(x) - fx) <= 1e-9 * (1.0 + std::abs(fx)));
      }
    }
  }
}

TEST_CASE("eta") {
  const auto t = random_tensors(3, 10);
  CHECK(compute_eta(t, Preference(5, 0, 0, 0)) == 0.0);
  CHECK(make_universal_pair(t, Preference(5, 0, 0, 0)).eta == 1.0);

  Matrix sigma(1, 1);
  sigma << 2.0;
  const auto one = MomentTensors::from_functions(
      Vector::Zero(1), sigma, [](std::size_t, std::size_t, std::size_t) { return -1.0; },
      [](std::size_t, std::size_t, std::size_t, std::size_t) { return 1.0; });
  CHECK(compute_eta(one, Preference(0, 1, 1, 1)) == doctest::Approx(22.0).epsilon(1e-15));

  // independent evaluation with the dense tensors
  const auto R = generate_returns(4, 30, 12);
  const auto d = oracle::dense_moments(R.values());
  const auto t4 = MomentTensors::from_returns(R);
  const Preference c(1, 2, 3, 4);
  double s_sig = 0, s_s = 0, s_k = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    double a = 0, b = 0, e = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      a += std::abs(d.sigma(i, j));
      for (std::size_t k = 0; k < 4; ++k) {
        b += std::abs(d.S(i, j, k));
        for (std::size_t l = 0; l < 4; ++l) e += std::abs(d.K(i, j, k, l));
      }
    }
    s_sig = std::max(s_sig, a);
    s_s = std::max(s_s, b);
    s_k = std::max(s_k, e);
  }
  CHECK(compute_eta(t4, c) == doctest::Approx(2 * 2 * s_sig + 6 * 3 * s_s + 12 * 4 * s_k).epsilon(1e-12));

  Rng rng(9);
  const auto up = make_universal_pair(t4, c);
  const CompiledPolynomial f(up.f);
  for (int k = 0; k < 100; ++k) {
    const Vector x = random_simplex_point(rng, 4);
    const Matrix M = up.eta * Matrix::Identity(4, 4) - f.hessian(x);
    CHECK(oracle::min_eigenvalue(M) >= -1e-8);
  }
}

TEST_CASE("universal pair gradients") {
  const auto t = random_tensors(5, 13);
  const Preference c(10, 1, 10, 1);
  const auto up = make_universal_pair(t, c);
  CHECK(up.eta > 0.0);
  const Vector g0 = grad_H_bar(up, Vector::Zero(5));
  CHECK((g0 - c[0] * t.mu()).cwiseAbs().maxCoeff() <= 1e-15);

  const auto flat = make_universal_pair(t, Preference(0, 0, 0, 0));
  Vector x = Vector::LinSpaced(5, 0.1, 0.5);
  CHECK((grad_H_bar(flat, x) - flat.eta * x).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(10);
  const auto fgrad = up.f.grad_exact();
  for (int k = 0; k < 20; ++k) {
    x = random_simplex_point(rng, 5);
    const Vector g = grad_H_bar(up, x);
    Vector ref = up.eta * x;
    for (int i = 0; i < 5; ++i) ref[i] -= fgrad[static_cast<std::size_t>(i)].eval(x);
    CHECK((g - ref).norm() <= 1e-10 * std::max(1.0, ref.norm()));
    const Vector fd = oracle::fd_gradient([&](const Vector& z) { return H_bar(up, z); }, x, 1e-4);
    CHECK((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
    const double fx = up.f.eval(x);
    CHECK(std::abs(G_bar(up, x) - H_bar(up, x) - fx) <= 1e-12 * (1.0 + std::abs(fx)));
  }
  CHECK_THROWS_AS(grad_H_bar(up, Vector::Zero(4)), std::invalid_argument);
}

TEST_CASE("negative weights are rejected") {
  CHECK_THROWS_AS(assemble_G_H(random_tensors(2, 1), Preference{std::array<double, 4>{0, -1, 0, 0}}),
                  std::invalid_argument);
}
