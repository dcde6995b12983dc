/**
 * @file dcsos.hpp
 * @brief DC decompositions of the MVSK objective.
 *
 * Two constructions:
 *  - DC-SOS: every monomial of m3 and m4 is split as g - h with convex SOS
 *    pieces, and the pieces are routed by the sign of the tensor entry. This
 *    yields f = G - H with G, H convex on the nonnegative orthant.
 *  - Universal: G(x) = (eta/2)|x|^2 and H(x) = (eta/2)|x|^2 - f(x), where
 *    eta bounds the spectral radius of the Hessian of f on the simplex.
 */
#pragma once

#include "mvsk/moments.hpp"
#include "mvsk/objective.hpp"
#include "mvsk/poly.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mvsk {

enum class Domain { AllSpace, NonnegOrthant };

Domain intersect(Domain a, Domain b);
const char* to_string(Domain d);

struct ConvexComponent {
  SparsePolynomial value;
  std::vector<SparsePolynomial> grad;
  Domain domain = Domain::AllSpace;

  ConvexComponent() = default;
  ConvexComponent(SparsePolynomial v, Domain d);
};

struct DcPair {
  ConvexComponent g;
  ConvexComponent h;
  SparsePolynomial target;

  DcPair() = default;
  DcPair(SparsePolynomial g_value, SparsePolynomial h_value, SparsePolynomial target_value,
         Domain domain);

  Domain domain() const { return intersect(g.domain, h.domain); }
  std::size_t nvars() const { return target.nvars(); }
};

/// (t, 0) for a convex t.
DcPair trivial_pair(const SparsePolynomial& t, Domain domain);

/// x_i x_j = (1/4)(x_i + x_j)^2 - (1/4)(x_i - x_j)^2.
/// @throws std::invalid_argument if i == j
DcPair decompose_bilinear(std::size_t nvars, std::size_t i, std::size_t j);

/// x_i x_j = (1/2)(x_i + x_j)^2 - (1/2)(x_i^2 + x_j^2).
/// @throws std::invalid_argument if i == j
DcPair decompose_bilinear_alt(std::size_t nvars, std::size_t i, std::size_t j);

/// x_i^power = x_i^power - 0 for an even power >= 2.
DcPair decompose_even_power(std::size_t nvars, std::size_t i, unsigned power);

/// 4uv = (u + v)^2 - (u - v)^2 for arbitrary polynomials u, v.
DcPair difference_of_squares(const SparsePolynomial& u, const SparsePolynomial& v);

/// p q = (1/2)[(p1 + q1)^2 + (p2 + q2)^2] - (1/2)[(p1 + q2)^2 + (p2 + q1)^2].
/// @throws std::invalid_argument on dimension mismatch
DcPair decompose_product(const DcPair& p, const DcPair& q);

/// a * (g, h) for a >= 0.
DcPair scale_pair(const DcPair& p, double a);

/// Monomial classes of m3 and m4. Role variables, in order:
///   Cube x_i^3 [i]; SquareLinear x_i^2 x_k [i,k]; Trilinear x_i x_j x_k [i,j,k];
///   Quartic x_i^4 [i]; SquareSquare x_i^2 x_k^2 [i,k]; CubeLinear x_i^3 x_k [i,k];
///   SquareBilinear x_i^2 x_j x_k [i,j,k]; Quadrilinear x_i x_j x_k x_l [i,j,k,l].
enum class MonomialShape {
  Cube,
  SquareLinear,
  Trilinear,
  Quartic,
  SquareSquare,
  CubeLinear,
  SquareBilinear,
  Quadrilinear,
};

inline constexpr std::array<MonomialShape, 8> kAllShapes = {
    MonomialShape::Cube,         MonomialShape::SquareLinear, MonomialShape::Trilinear,
    MonomialShape::Quartic,      MonomialShape::SquareSquare, MonomialShape::CubeLinear,
    MonomialShape::SquareBilinear, MonomialShape::Quadrilinear};

std::size_t role_count(MonomialShape shape);
const char* to_string(MonomialShape shape);

/// The split of one monomial class over role_count(shape) local variables.
/// Cached; the reference stays valid for the program lifetime.
const DcPair& monomial_split(MonomialShape shape);

/// Closed-form gradients of the split pieces, written out term by term over
/// the same local variables (first: g, second: h).
std::pair<std::vector<SparsePolynomial>, std::vector<SparsePolynomial>> closed_form_gradients(
    MonomialShape shape);

/// One nonzero tensor entry classified and signed for assembly.
struct RoutedEntry {
  MonomialShape shape;
  std::array<std::uint32_t, 4> roles{};  ///< global variable per role
  double weight;                         ///< multiplicity * entry value, nonzero
};

/// Classifies a sorted index tuple of length 3 or 4 into shape and roles.
std::pair<MonomialShape, std::array<std::uint32_t, 4>> classify(
    std::span<const std::size_t> sorted_indices);

/// Nonzero entries of S (order 3) or K (order 4); exact zeros are skipped.
std::vector<RoutedEntry> route_entries(const MomentTensors& tensors, unsigned order);

/// Positive weights add (w g, w h); negative weights add (|w| h, |w| g).
DcPair assemble_routed(std::size_t nvars, const std::vector<RoutedEntry>& entries,
                       const SparsePolynomial& target, Domain domain);

/// (g_m3, h_m3), domain NonnegOrthant.
DcPair build_m3_pair(const MomentTensors& tensors);
/// (g_m4, h_m4), domain AllSpace.
DcPair build_m4_pair(const MomentTensors& tensors);

/// G = -c1 m1 + c2 m2 + c3 h_m3 + c4 g_m4, H = c3 g_m3 + c4 h_m4, target f.
DcPair assemble_G_H(const MomentTensors& tensors, const Preference& c);

/// eta = 2 c2 |Sigma|_inf + 6 c3 max_i sum_jk |S_ijk| + 12 c4 max_i sum_jkl |K_ijkl|.
double compute_eta(const MomentTensors& tensors, const Preference& c);

struct UniversalPair {
  double eta = 1.0;
  SparsePolynomial f;
  MomentTensors tensors;
  Preference c;
};

/// Uses compute_eta, or 1 when that is zero (f linear).
UniversalPair make_universal_pair(const MomentTensors& tensors, const Preference& c);
UniversalPair make_universal_pair(const MomentTensors& tensors, const Preference& c,
                                  SparsePolynomial f);

/// eta x + c1 mu - 2 c2 Sigma x + c3 grad m3(x) - c4 grad m4(x).
Vector grad_H_bar(const UniversalPair& pair, const Vector& x);
double H_bar(const UniversalPair& pair, const Vector& x);
double G_bar(const UniversalPair& pair, const Vector& x);

}  // namespace mvsk
