/**
 * @file dca.hpp
 * @brief Outer solvers for min f over a feasible set: DCA and boosted DCA on
 *     the DC-SOS pair, and their universal counterparts on (eta/2)|x|^2 - H.
 *
 * All four share one driver. A boosted iteration takes the plain DCA point
 * y = x^{k+1}, forms d = y - x^k and, when A(y) is contained in A(x^k) and
 * <grad f(y), d> < -1e-12, runs an Armijo search from y along d with initial
 * step sqrt(2)/|d|.
 */
#pragma once

#include "mvsk/dcsos.hpp"
#include "mvsk/subsolvers.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mvsk {

enum class StopMode { DfOnly, DfAndDx };
enum class SolveStatus { Converged, MaxIter, SubproblemFailure };
enum class Algorithm { Dca, Bdca, Udca, Ubdca };

const char* to_string(SolveStatus s);
const char* to_string(Algorithm a);
/// Accepts dca, bdca, udca, ubdca (case-insensitive).
std::optional<Algorithm> parse_algorithm(std::string_view name);
bool is_boosted(Algorithm a);
bool is_universal(Algorithm a);

struct SolverConfig {
  double eps1 = 1e-6;
  double eps2 = 1e-4;
  double beta = 0.5;
  double sigma = 1e-3;
  double eps_ls = 1e-8;
  int max_outer_iter = 1000;
  double sub_tol = 1e-8;
  int sub_max_iter = 5000;
  double active_tol = 1e-8;
  StopMode stop_mode = StopMode::DfOnly;
  bool record_iterates = false;

  /// @throws std::invalid_argument for out-of-range parameters
  void validate() const;
};

struct IterationRecord {
  int k = 0;
  double f = 0.0;           ///< f after the iteration (after the line search, if any)
  double df = 0.0;
  double dx = 0.0;
  double f_dca = 0.0;       ///< f at the plain DCA point
  double descent_ip = 0.0;  ///< <grad f(y), d> at the DCA point y
  double d_norm = 0.0;
  double alpha = 0.0;       ///< accepted step, 0 when the search did not move
  int ls_trials = 0;
  bool ls_fired = false;
  bool ls_moved = false;
  bool sub_converged = true;
  int sub_iterations = 0;
  std::optional<Vector> x;  ///< filled when record_iterates is set
};

struct SolveResult {
  Vector x_star;
  double f_star = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIter;
  double kkt_residual = 0.0;
  std::vector<IterationRecord> trace;
  std::string message;
};

/// {i : x_i <= tol}
std::vector<std::size_t> active_set(const Vector& x, double tol = 1e-8);

/// max(0, max over vertices z of <grad, x - z>).
double kkt_residual(const Vector& grad, const FeasibleSet& set, const Vector& x);
double kkt_residual(const CompiledPolynomial& f, const FeasibleSet& set, const Vector& x);

struct LineSearchResult {
  Vector x;
  double alpha = 0.0;
  int trials = 0;
  bool moved = false;
};

using ObjectiveFn = std::function<double(const Vector&)>;
using FeasibilityFn = std::function<bool(const Vector&)>;

/// Backtracking from alpha0 by beta while alpha > eps_ls/|d|; accepts the first
/// feasible x + alpha d with f(x) - f(x + alpha d) - sigma alpha^2 |d|^2 >= 0.
/// Returns x unchanged when no step qualifies.
LineSearchResult armijo_search(const ObjectiveFn& f, const Vector& x, double fx, const Vector& d,
                               double alpha0, const SolverConfig& cfg,
                               const FeasibilityFn& feasible);
LineSearchResult armijo_search(const ObjectiveFn& f, const Vector& x, const Vector& d,
                               double alpha0, const SolverConfig& cfg, const FeasibleSet& set);

/// Everything the four solvers need for one instance.
struct MvskModel {
  MomentTensors tensors;
  Preference c;
  SparsePolynomial f;
  CompiledPolynomial f_compiled;
  DcPair dc;
  CompiledPolynomial G;
  CompiledPolynomial H;
  UniversalPair universal;
};

MvskModel build_model(const MomentTensors& tensors, const Preference& c);

/// @throws std::invalid_argument if x0 is not in the set (1e-9 slack) or the
///     configuration is invalid
SolveResult solve(const MvskModel& model, Algorithm algo, const FeasibleSet& set, const Vector& x0,
                  const SolverConfig& cfg = {});

SolveResult dca_solve(const DcPair& pair, const SparsePolynomial& f, const FeasibleSet& set,
                      const Vector& x0, const SolverConfig& cfg = {});
SolveResult bdca_solve(const DcPair& pair, const SparsePolynomial& f, const FeasibleSet& set,
                       const Vector& x0, const SolverConfig& cfg = {});
SolveResult udca_solve(const UniversalPair& up, const SparsePolynomial& f, const FeasibleSet& set,
                       const Vector& x0, const SolverConfig& cfg = {});
SolveResult ubdca_solve(const UniversalPair& up, const SparsePolynomial& f,
                        const FeasibleSet& set, const Vector& x0, const SolverConfig& cfg = {});

/// Header k,f,df,dx,alpha,ls_trials,descent_ip,kkt_residual; the residual is
/// written on the last row only.
void write_trace_csv(std::ostream& out, const SolveResult& result);

}  // namespace mvsk
