#include "mvsk/dcsos.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace mvsk {

namespace {

SparsePolynomial square(const SparsePolynomial& p) { return mul(p, p); }

SparsePolynomial var(std::size_t nvars, std::size_t i) {
  return SparsePolynomial::variable(nvars, i);
}

SparsePolynomial one(std::size_t nvars) { return SparsePolynomial::constant(nvars, 1.0); }

DcPair build_split(MonomialShape shape) {
  using S = MonomialShape;
  const std::size_t nv = role_count(shape);
  auto x = [nv](std::size_t i) { return var(nv, i); };
  switch (shape) {
    case S::Cube: {
      const auto c = x(0) * x(0) * x(0);
      return trivial_pair(c, Domain::NonnegOrthant);
    }
    case S::SquareLinear:
      return scale_pair(decompose_product(trivial_pair(square(x(0)), Domain::AllSpace),
                                          difference_of_squares(x(1), one(nv))),
                        0.25);
    case S::Trilinear:
      return scale_pair(decompose_product(difference_of_squares(x(0), x(1)),
                                          difference_of_squares(x(2), one(nv))),
                        1.0 / 16.0);
    case S::Quartic:
      return decompose_even_power(nv, 0, 4);
    case S::SquareSquare: {
      const auto u = square(x(0));
      const auto v = square(x(1));
      return DcPair(0.5 * square(u + v), 0.5 * (square(u) + square(v)), u * v, Domain::AllSpace);
    }
    case S::CubeLinear:
      return scale_pair(decompose_product(trivial_pair(square(x(0)), Domain::AllSpace),
                                          difference_of_squares(x(0), x(1))),
                        0.25);
    case S::SquareBilinear:
      return scale_pair(decompose_product(trivial_pair(square(x(0)), Domain::AllSpace),
                                          difference_of_squares(x(1), x(2))),
                        0.25);
    case S::Quadrilinear:
      return scale_pair(decompose_product(difference_of_squares(x(0), x(1)),
                                          difference_of_squares(x(2), x(3))),
                        1.0 / 16.0);
  }
  throw std::logic_error("unknown monomial shape");
}

// Row sums of the full permutation-expanded |tensor|, from sorted tuples: a
// sorted tuple t with multiplicity M contributes M * count_i(t) / d to row i.
template <std::size_t D>
void add_row_contribution(Vector& rows, const std::array<std::size_t, D>& idx, double v) {
  const double m = permutation_multiplicity(idx);
  for (std::size_t p = 0; p < D; ++p) {
    if (p > 0 && idx[p] == idx[p - 1]) continue;
    const auto cnt = std::count(idx.begin(), idx.end(), idx[p]);
    rows[static_cast<Eigen::Index>(idx[p])] +=
        std::abs(v) * m * static_cast<double>(cnt) / static_cast<double>(D);
  }
}

}  // namespace

Domain intersect(Domain a, Domain b) {
  return (a == Domain::NonnegOrthant || b == Domain::NonnegOrthant) ? Domain::NonnegOrthant
                                                                     : Domain::AllSpace;
}

const char* to_string(Domain d) {
  return d == Domain::AllSpace ? "ALL_SPACE" : "NONNEG_ORTHANT";
}

ConvexComponent::ConvexComponent(SparsePolynomial v, Domain d)
    : value(std::move(v)), grad(value.grad_exact()), domain(d) {}

DcPair::DcPair(SparsePolynomial g_value, SparsePolynomial h_value, SparsePolynomial target_value,
               Domain domain)
    : g(std::move(g_value), domain), h(std::move(h_value), domain), target(std::move(target_value)) {
  require_dimension(static_cast<Eigen::Index>(g.value.nvars()),
                    static_cast<Eigen::Index>(target.nvars()), "dc pair g");
  require_dimension(static_cast<Eigen::Index>(h.value.nvars()),
                    static_cast<Eigen::Index>(target.nvars()), "dc pair h");
}

DcPair trivial_pair(const SparsePolynomial& t, Domain domain) {
  return DcPair(t, SparsePolynomial(t.nvars()), t, domain);
}

DcPair decompose_bilinear(std::size_t nvars, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("decompose_bilinear needs i != j");
  return scale_pair(difference_of_squares(var(nvars, i), var(nvars, j)), 0.25);
}

DcPair decompose_bilinear_alt(std::size_t nvars, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("decompose_bilinear_alt needs i != j");
  const auto xi = var(nvars, i);
  const auto xj = var(nvars, j);
  return DcPair(0.5 * square(xi + xj), 0.5 * (square(xi) + square(xj)), xi * xj,
                Domain::AllSpace);
}

DcPair decompose_even_power(std::size_t nvars, std::size_t i, unsigned power) {
  if (power < 2 || power % 2 != 0) throw std::invalid_argument("power must be even and >= 2");
  const Monomial m{{static_cast<std::uint32_t>(i), power}};
  return trivial_pair(SparsePolynomial::term(nvars, m, 1.0), Domain::AllSpace);
}

DcPair difference_of_squares(const SparsePolynomial& u, const SparsePolynomial& v) {
  return DcPair(square(u + v), square(u - v), 4.0 * (u * v), Domain::AllSpace);
}

DcPair decompose_product(const DcPair& p, const DcPair& q) {
  require_dimension(static_cast<Eigen::Index>(q.nvars()), static_cast<Eigen::Index>(p.nvars()),
                    "decompose_product");
  const auto& p1 = p.g.value;
  const auto& p2 = p.h.value;
  const auto& q1 = q.g.value;
  const auto& q2 = q.h.value;
  return DcPair(0.5 * (square(p1 + q1) + square(p2 + q2)),
                0.5 * (square(p1 + q2) + square(p2 + q1)), p.target * q.target,
                intersect(p.domain(), q.domain()));
}

DcPair scale_pair(const DcPair& p, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("scale_pair needs a >= 0");
  return DcPair(scale(p.g.value, a), scale(p.h.value, a), scale(p.target, a), p.domain());
}

std::size_t role_count(MonomialShape shape) {
  using S = MonomialShape;
  switch (shape) {
    case S::Cube:
    case S::Quartic:
      return 1;
    case S::SquareLinear:
    case S::SquareSquare:
    case S::CubeLinear:
      return 2;
    case S::Trilinear:
    case S::SquareBilinear:
      return 3;
    case S::Quadrilinear:
      return 4;
  }
  return 0;
}

const char* to_string(MonomialShape shape) {
  using S = MonomialShape;
  switch (shape) {
    case S::Cube: return "x_i^3";
    case S::SquareLinear: return "x_i^2 x_k";
    case S::Trilinear: return "x_i x_j x_k";
    case S::Quartic: return "x_i^4";
    case S::SquareSquare: return "x_i^2 x_k^2";
    case S::CubeLinear: return "x_i^3 x_k";
    case S::SquareBilinear: return "x_i^2 x_j x_k";
    case S::Quadrilinear: return "x_i x_j x_k x_l";
  }
  return "?";
}

const DcPair& monomial_split(MonomialShape shape) {
  static std::map<MonomialShape, DcPair> cache;
  static std::mutex mu;
  std::lock_guard lock(mu);
  auto it = cache.find(shape);
  if (it == cache.end()) it = cache.emplace(shape, build_split(shape)).first;
  return it->second;
}

std::pair<std::vector<SparsePolynomial>, std::vector<SparsePolynomial>> closed_form_gradients(
    MonomialShape shape) {
  using S = MonomialShape;
  const std::size_t nv = role_count(shape);
  auto X = [nv](std::size_t i) { return var(nv, i); };
  const auto k1 = one(nv);
  const SparsePolynomial zero(nv);
  switch (shape) {
    case S::Cube: {
      const auto xi = X(0);
      return {{3.0 * (xi * xi)}, {zero}};
    }
    case S::SquareLinear: {
      const auto xi = X(0), xk = X(1);
      return {{0.5 * (xi * (xk * xk + 2.0 * xk + xi * xi + k1)),
               0.5 * (2.0 * (xk * xk * xk) + xi * xi * xk + 6.0 * xk + xi * xi)},
              {0.5 * (xi * (xk * xk - 2.0 * xk + xi * xi + k1)),
               0.5 * (2.0 * (xk * xk * xk) + xi * xi * xk + 6.0 * xk - xi * xi)}};
    }
    case S::Trilinear: {
      const auto xi = X(0), xj = X(1), xk = X(2);
      auto g = std::vector<SparsePolynomial>{
          0.25 * (xi * xk * xk + 2.0 * (xj * xk) + 3.0 * (xi * xj * xj) + xi * xi * xi + xi),
          0.25 * (xj * xk * xk + 2.0 * (xi * xk) + xj * xj * xj + 3.0 * (xi * xi * xj) + xj),
          0.25 * (xk * xk * xk + xj * xj * xk + xi * xi * xk + 3.0 * xk + 2.0 * (xi * xj))};
      auto h = std::vector<SparsePolynomial>{
          0.25 * (xi * xk * xk - 2.0 * (xj * xk) + 3.0 * (xi * xj * xj) + xi * xi * xi + xi),
          0.25 * (xj * xk * xk - 2.0 * (xi * xk) + xj * xj * xj + 3.0 * (xi * xi * xj) + xj),
          0.25 * (xk * xk * xk + xj * xj * xk + xi * xi * xk + 3.0 * xk - 2.0 * (xi * xj))};
      return {g, h};
    }
    case S::Quartic: {
      const auto xi = X(0);
      return {{4.0 * (xi * xi * xi)}, {zero}};
    }
    case S::SquareSquare: {
      const auto xi = X(0), xk = X(1);
      return {{2.0 * ((xk * xk + xi * xi) * xi), 2.0 * ((xk * xk + xi * xi) * xk)},
              {2.0 * (xi * xi * xi), 2.0 * (xk * xk * xk)}};
    }
    case S::CubeLinear: {
      const auto xi = X(0), xk = X(1);
      return {{0.5 * (xi * (7.0 * (xk * xk) + 3.0 * (xi * xk) + 5.0 * (xi * xi))),
               0.5 * (2.0 * (xk * xk * xk) + 7.0 * (xi * xi * xk) + xi * xi * xi)},
              {0.5 * (xi * (7.0 * (xk * xk) - 3.0 * (xi * xk) + 5.0 * (xi * xi))),
               0.5 * (2.0 * (xk * xk * xk) + 7.0 * (xi * xi * xk) - xi * xi * xi)}};
    }
    case S::SquareBilinear: {
      const auto xi = X(0), xj = X(1), xk = X(2);
      auto g = std::vector<SparsePolynomial>{
          0.5 * (xi * (xk * xk + 2.0 * (xj * xk) + xj * xj + xi * xi)),
          0.5 * (6.0 * (xj * xk * xk) + xi * xi * xk + 2.0 * (xj * xj * xj) + xi * xi * xj),
          0.5 * (2.0 * (xk * xk * xk) + 6.0 * (xj * xj * xk) + xi * xi * xk + xi * xi * xj)};
      auto h = std::vector<SparsePolynomial>{
          0.5 * (xi * (xk * xk - 2.0 * (xj * xk) + xj * xj + xi * xi)),
          0.5 * (6.0 * (xj * xk * xk) - xi * xi * xk + 2.0 * (xj * xj * xj) + xi * xi * xj),
          0.5 * (2.0 * (xk * xk * xk) + 6.0 * (xj * xj * xk) + xi * xi * xk - xi * xi * xj)};
      return {g, h};
    }
    case S::Quadrilinear: {
      const auto xi = X(0), xj = X(1), xk = X(2), xl = X(3);
      auto g = std::vector<SparsePolynomial>{
          0.25 * (xi * xl * xl + 2.0 * (xj * xk * xl) + xi * xk * xk + 3.0 * (xi * xj * xj) +
                  xi * xi * xi),
          0.25 * (xj * xl * xl + 2.0 * (xi * xk * xl) + xj * xk * xk + xj * xj * xj +
                  3.0 * (xi * xi * xj)),
          0.25 * (3.0 * (xk * xl * xl) + 2.0 * (xi * xj * xl) + xk * xk * xk + xj * xj * xk +
                  xi * xi * xk),
          0.25 * (xl * xl * xl + 3.0 * (xk * xk * xl) + xj * xj * xl + xi * xi * xl +
                  2.0 * (xi * xj * xk))};
      auto h = std::vector<SparsePolynomial>{
          0.25 * (xi * xl * xl - 2.0 * (xj * xk * xl) + xi * xk * xk + 3.0 * (xi * xj * xj) +
                  xi * xi * xi),
          0.25 * (xj * xl * xl - 2.0 * (xi * xk * xl) + xj * xk * xk + xj * xj * xj +
                  3.0 * (xi * xi * xj)),
          0.25 * (3.0 * (xk * xl * xl) - 2.0 * (xi * xj * xl) + xk * xk * xk + xj * xj * xk +
                  xi * xi * xk),
          0.25 * (xl * xl * xl + 3.0 * (xk * xk * xl) + xj * xj * xl + xi * xi * xl -
                  2.0 * (xi * xj * xk))};
      return {g, h};
    }
  }
  throw std::logic_error("unknown monomial shape");
}

std::pair<MonomialShape, std::array<std::uint32_t, 4>> classify(
    std::span<const std::size_t> t) {
  using S = MonomialShape;
  auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  if (!std::is_sorted(t.begin(), t.end())) throw std::invalid_argument("classify: unsorted tuple");
  if (t.size() == 3) {
    const auto a = t[0], b = t[1], c = t[2];
    if (a == c) return {S::Cube, {u(a)}};
    if (a == b) return {S::SquareLinear, {u(a), u(c)}};
    if (b == c) return {S::SquareLinear, {u(b), u(a)}};
    return {S::Trilinear, {u(a), u(b), u(c)}};
  }
  if (t.size() == 4) {
    const auto a = t[0], b = t[1], c = t[2], d = t[3];
    if (a == d) return {S::Quartic, {u(a)}};
    if (a == c) return {S::CubeLinear, {u(a), u(d)}};
    if (b == d) return {S::CubeLinear, {u(b), u(a)}};
    if (a == b && c == d) return {S::SquareSquare, {u(a), u(c)}};
    if (a == b) return {S::SquareBilinear, {u(a), u(c), u(d)}};
    if (b == c) return {S::SquareBilinear, {u(b), u(a), u(d)}};
    if (c == d) return {S::SquareBilinear, {u(c), u(a), u(b)}};
    return {S::Quadrilinear, {u(a), u(b), u(c), u(d)}};
  }
  throw std::invalid_argument("classify: tuple length must be 3 or 4");
}

std::vector<RoutedEntry> route_entries(const MomentTensors& tensors, unsigned order) {
  std::vector<RoutedEntry> out;
  auto push = [&out](std::span<const std::size_t> idx, double v) {
    if (v == 0.0) return;
    const auto [shape, roles] = classify(idx);
    out.push_back({shape, roles, permutation_multiplicity(idx) * v});
  };
  if (order == 3) {
    tensors.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
      const std::array<std::size_t, 3> idx{i, j, k};
      push(idx, s);
    });
  } else if (order == 4) {
    tensors.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                              double v) {
      const std::array<std::size_t, 4> idx{i, j, k, l};
      push(idx, v);
    });
  } else {
    throw std::invalid_argument("route_entries: order must be 3 or 4");
  }
  return out;
}

DcPair assemble_routed(std::size_t nvars, const std::vector<RoutedEntry>& entries,
                       const SparsePolynomial& target, Domain domain) {
  PolynomialAccumulator g(nvars);
  PolynomialAccumulator h(nvars);
  for (const auto& e : entries) {
    const DcPair& split = monomial_split(e.shape);
    const std::span<const std::uint32_t> remap(e.roles.data(), role_count(e.shape));
    const double w = std::abs(e.weight);
    const auto& gp = e.weight > 0.0 ? split.g.value : split.h.value;
    const auto& hp = e.weight > 0.0 ? split.h.value : split.g.value;
    g.add(gp, w, remap);
    h.add(hp, w, remap);
  }
  return DcPair(g.finish(), h.finish(), target, domain);
}

DcPair build_m3_pair(const MomentTensors& tensors) {
  return assemble_routed(tensors.assets(), route_entries(tensors, 3), moment_polynomial(tensors, 3),
                         Domain::NonnegOrthant);
}

DcPair build_m4_pair(const MomentTensors& tensors) {
  return assemble_routed(tensors.assets(), route_entries(tensors, 4), moment_polynomial(tensors, 4),
                         Domain::AllSpace);
}

DcPair assemble_G_H(const MomentTensors& tensors, const Preference& c) {
  const auto n = tensors.assets();
  PolynomialAccumulator G(n);
  PolynomialAccumulator H(n);
  if (c[0] != 0.0) G.add(moment_polynomial(tensors, 1), -c[0]);
  if (c[1] != 0.0) G.add(moment_polynomial(tensors, 2), c[1]);
  if (c[2] != 0.0) {
    const auto m3 = assemble_routed(n, route_entries(tensors, 3), SparsePolynomial(n),
                                    Domain::NonnegOrthant);
    G.add(m3.h.value, c[2]);
    H.add(m3.g.value, c[2]);
  }
  if (c[3] != 0.0) {
    const auto m4 =
        assemble_routed(n, route_entries(tensors, 4), SparsePolynomial(n), Domain::AllSpace);
    G.add(m4.g.value, c[3]);
    H.add(m4.h.value, c[3]);
  }
  return DcPair(G.finish(), H.finish(), build_objective(tensors, c), Domain::NonnegOrthant);
}

double compute_eta(const MomentTensors& tensors, const Preference& c) {
  const auto n = static_cast<Eigen::Index>(tensors.assets());
  double eta = 0.0;
  if (c[1] != 0.0) {
    eta += 2.0 * c[1] * tensors.sigma_matrix().cwiseAbs().rowwise().sum().maxCoeff();
  }
  if (c[2] != 0.0) {
    Vector rows = Vector::Zero(n);
    tensors.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
      add_row_contribution(rows, std::array<std::size_t, 3>{i, j, k}, s);
    });
    eta += 6.0 * c[2] * rows.maxCoeff();
  }
  if (c[3] != 0.0) {
    Vector rows = Vector::Zero(n);
    tensors.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                              double v) {
      add_row_contribution(rows, std::array<std::size_t, 4>{i, j, k, l}, v);
    });
    eta += 12.0 * c[3] * rows.maxCoeff();
  }
  return eta;
}

UniversalPair make_universal_pair(const MomentTensors& tensors, const Preference& c) {
  return make_universal_pair(tensors, c, build_objective(tensors, c));
}

UniversalPair make_universal_pair(const MomentTensors& tensors, const Preference& c,
                                  SparsePolynomial f) {
  const double eta = compute_eta(tensors, c);
  return UniversalPair{eta > 0.0 ? eta : 1.0, std::move(f), tensors, c};
}

Vector grad_H_bar(const UniversalPair& pair, const Vector& x) {
  const auto g = portfolio_moment_gradients(pair.tensors, x);
  const auto& c = pair.c;
  return pair.eta * x + c[0] * g.g1 - c[1] * g.g2 + c[2] * g.g3 - c[3] * g.g4;
}

double H_bar(const UniversalPair& pair, const Vector& x) {
  return G_bar(pair, x) - objective_value(pair.tensors, pair.c, x);
}

double G_bar(const UniversalPair& pair, const Vector& x) {
  return 0.5 * pair.eta * x.squaredNorm();
}

}  // namespace mvsk
