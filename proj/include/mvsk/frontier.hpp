/**
 * @file frontier.hpp
 * @brief Return-constrained sweeps: min c2 m2 - c3 m3 + c4 m4 over the simplex
 *     with m1(x) = r, for each r on a grid.
 */
#pragma once

#include "mvsk/dca.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvsk {

enum class InvestorKind { Neutral, Averse, Seeking };

const char* to_string(InvestorKind k);
std::optional<InvestorKind> parse_investor_kind(std::string_view name);

/// Neutral: every c_i in [20, 22]. Averse: c2, c4 in [20, 22] and c1, c3 in
/// [1, 3]. Seeking: c1, c3 in [20, 22] and c2, c4 in [1, 3]. Deterministic in seed.
Preference sample_preference(InvestorKind kind, std::uint64_t seed);

/// lo, lo + step, ..., hi (inclusive up to rounding); each point is lo + k step.
/// @throws std::invalid_argument unless step > 0 and lo <= hi
std::vector<double> make_return_grid(double lo = 0.0, double hi = 0.4, double step = 0.001);

struct FrontierSpec {
  std::vector<double> r_grid = make_return_grid();
  Preference c;
  std::uint64_t seed = 0;  ///< drives the starting point of the first feasible r
};

enum class FrontierStatus { Converged, MaxIter, SubproblemFailure, Infeasible };
const char* to_string(FrontierStatus s);

struct FrontierPoint {
  double r = 0.0;
  FrontierStatus status = FrontierStatus::Infeasible;
  Vector x;  ///< empty for infeasible r
  PortfolioMoments moments;
  int iterations = 0;
};

/// Solves the grid in order, warm-starting each point from the previous
/// solution projected onto the new set. c1 is ignored.
/// @throws std::invalid_argument if the grid is unsorted or not finite
std::vector<FrontierPoint> generate_frontier(const MomentTensors& tensors, const FrontierSpec& spec,
                                             const SolverConfig& cfg = {},
                                             Algorithm algo = Algorithm::Bdca);

/// Header r,m1,m2,m3,m4,status,x_1..x_n; 12 significant digits.
void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& points,
                        std::size_t n);

}  // namespace mvsk
