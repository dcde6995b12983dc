#include "mvsk/dca.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <ostream>

namespace mvsk {

namespace {

struct StepOutcome {
  Vector y;
  bool converged = true;
  int iterations = 0;
};

using Stepper = std::function<StepOutcome(const Vector&)>;

bool subset_of(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

SolveResult run(const Stepper& step, const CompiledPolynomial& f, const FeasibleSet& set,
                const Vector& x0, const SolverConfig& cfg, bool boosted) {
  cfg.validate();
  require_dimension(x0.size(), static_cast<Eigen::Index>(set.dimension()), "initial point");
  if (!set.contains(x0, 1e-9)) throw std::invalid_argument("initial point is not feasible");

  SolveResult res;
  Vector x = set.contains(x0) ? x0 : set.project(x0);
  double fx = f.value(x);
  Vector grad;
  const ObjectiveFn fval = [&f](const Vector& z) { return f.value(z); };

  for (int k = 0; k < cfg.max_outer_iter; ++k) {
    IterationRecord rec;
    rec.k = k + 1;
    StepOutcome s;
    try {
      s = step(x);
    } catch (const std::runtime_error& e) {
      res.status = SolveStatus::SubproblemFailure;
      res.message = e.what();
      break;
    }
    rec.sub_converged = s.converged;
    rec.sub_iterations = s.iterations;
    const Vector& y = s.y;
    const double fy = f.value(y);
    const Vector d = y - x;
    rec.f_dca = fy;
    rec.d_norm = d.norm();
    f.value_and_gradient(y, grad);
    rec.descent_ip = grad.dot(d);

    Vector x_next = y;
    double f_next = fy;
    if (boosted && rec.d_norm > 0.0) {
      const bool active_ok =
          subset_of(active_set(y, cfg.active_tol), active_set(x, cfg.active_tol));
      if (active_ok && rec.descent_ip < -1e-12) {
        rec.ls_fired = true;
        const auto ls = armijo_search(fval, y, fy, d, std::sqrt(2.0) / rec.d_norm, cfg,
                                      [&set](const Vector& z) { return set.contains(z); });
        rec.ls_trials = ls.trials;
        rec.ls_moved = ls.moved;
        if (ls.moved) {
          rec.alpha = ls.alpha;
          x_next = ls.x;
          f_next = f.value(x_next);
        }
      }
    }
    rec.f = f_next;
    rec.df = std::abs(f_next - fx) / (1.0 + std::abs(f_next));
    rec.dx = (x_next - x).norm() / (1.0 + x_next.norm());
    if (cfg.record_iterates) rec.x = x_next;
    res.trace.push_back(std::move(rec));
    x = std::move(x_next);
    fx = f_next;
    res.iterations = k + 1;

    const auto& last = res.trace.back();
    if (last.df <= cfg.eps1 && (cfg.stop_mode == StopMode::DfOnly || last.dx <= cfg.eps2)) {
      res.status = SolveStatus::Converged;
      break;
    }
  }
  res.x_star = x;
  res.f_star = fx;
  res.kkt_residual = kkt_residual(f, set, x);
  return res;
}

Stepper dc_stepper(const CompiledPolynomial& G, const CompiledPolynomial& H,
                   const FeasibleSet& set, const SolverConfig& cfg) {
  return [&G, &H, &set, &cfg](const Vector& x) {
    const Vector lin = H.gradient(x);
    const auto sub = minimize_convex_over_set(G, lin, set, x, cfg.sub_tol, cfg.sub_max_iter);
    return StepOutcome{sub.x, sub.converged, sub.iterations};
  };
}

Stepper universal_stepper(const UniversalPair& up, const FeasibleSet& set) {
  return [&up, &set](const Vector& x) {
    return StepOutcome{solve_quadratic_subproblem(grad_H_bar(up, x), up.eta, set), true, 1};
  };
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "CONVERGED";
    case SolveStatus::MaxIter: return "MAX_ITER";
    case SolveStatus::SubproblemFailure: return "SUBPROBLEM_FAILURE";
  }
  return "?";
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Dca: return "dca";
    case Algorithm::Bdca: return "bdca";
    case Algorithm::Udca: return "udca";
    case Algorithm::Ubdca: return "ubdca";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto a : {Algorithm::Dca, Algorithm::Bdca, Algorithm::Udca, Algorithm::Ubdca}) {
    if (lower == to_string(a)) return a;
  }
  return std::nullopt;
}

bool is_boosted(Algorithm a) { return a == Algorithm::Bdca || a == Algorithm::Ubdca; }
bool is_universal(Algorithm a) { return a == Algorithm::Udca || a == Algorithm::Ubdca; }

void SolverConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("{} must be positive", name));
    }
  };
  positive(eps1, "eps1");
  positive(eps2, "eps2");
  positive(eps_ls, "eps_ls");
  positive(sub_tol, "sub_tol");
  positive(active_tol, "active_tol");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (!(sigma > 0.0 && sigma < 1.0)) throw std::invalid_argument("sigma must lie in (0, 1)");
  if (max_outer_iter < 1) throw std::invalid_argument("max_outer_iter must be >= 1");
  if (sub_max_iter < 1) throw std::invalid_argument("sub_max_iter must be >= 1");
}

std::vector<std::size_t> active_set(const Vector& x, double tol) {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] <= tol) out.push_back(static_cast<std::size_t>(i));
  return out;
}

double kkt_residual(const Vector& grad, const FeasibleSet& set, const Vector& x) {
  require_dimension(grad.size(), x.size(), "kkt_residual");
  const double gx = grad.dot(x);
  double worst = 0.0;
  if (set.kind() == SetKind::Simplex) {
    worst = gx - grad.minCoeff();
  } else {
    for (const auto& z : set.vertices()) worst = std::max(worst, gx - grad.dot(z));
  }
  return std::max(0.0, worst);
}

double kkt_residual(const CompiledPolynomial& f, const FeasibleSet& set, const Vector& x) {
  return kkt_residual(f.gradient(x), set, x);
}

LineSearchResult armijo_search(const ObjectiveFn& f, const Vector& x, double fx, const Vector& d,
                               double alpha0, const SolverConfig& cfg,
                               const FeasibilityFn& feasible) {
  LineSearchResult res{x, 0.0, 0, false};
  const double dn = d.norm();
  if (dn == 0.0) return res;
  const double d2 = dn * dn;
  for (double alpha = alpha0; alpha > cfg.eps_ls / dn; alpha *= cfg.beta) {
    ++res.trials;
    Vector xh = x + alpha * d;
    if (!feasible(xh)) continue;
    if (fx - f(xh) - cfg.sigma * alpha * alpha * d2 >= 0.0) {
      res.x = std::move(xh);
      res.alpha = alpha;
      res.moved = true;
      return res;
    }
  }
  return res;
}

LineSearchResult armijo_search(const ObjectiveFn& f, const Vector& x, const Vector& d,
                               double alpha0, const SolverConfig& cfg, const FeasibleSet& set) {
  return armijo_search(f, x, f(x), d, alpha0, cfg,
                       [&set](const Vector& z) { return set.contains(z); });
}

MvskModel build_model(const MomentTensors& tensors, const Preference& c) {
  MvskModel m;
  m.tensors = tensors;
  m.c = c;
  m.f = build_objective(tensors, c);
  m.f_compiled = CompiledPolynomial(m.f);
  m.dc = assemble_G_H(tensors, c);
  m.G = CompiledPolynomial(m.dc.g.value);
  m.H = CompiledPolynomial(m.dc.h.value);
  m.universal = make_universal_pair(tensors, c, m.f);
  return m;
}

SolveResult solve(const MvskModel& model, Algorithm algo, const FeasibleSet& set,
                  const Vector& x0, const SolverConfig& cfg) {
  const Stepper step = is_universal(algo) ? universal_stepper(model.universal, set)
                                          : dc_stepper(model.G, model.H, set, cfg);
  return run(step, model.f_compiled, set, x0, cfg, is_boosted(algo));
}

namespace {

SolveResult dc_solve(const DcPair& pair, const SparsePolynomial& f, const FeasibleSet& set,
                     const Vector& x0, const SolverConfig& cfg, bool boosted) {
  const CompiledPolynomial G(pair.g.value);
  const CompiledPolynomial H(pair.h.value);
  return run(dc_stepper(G, H, set, cfg), CompiledPolynomial(f), set, x0, cfg, boosted);
}

SolveResult universal_solve(const UniversalPair& up, const SparsePolynomial& f,
                            const FeasibleSet& set, const Vector& x0, const SolverConfig& cfg,
                            bool boosted) {
  return run(universal_stepper(up, set), CompiledPolynomial(f), set, x0, cfg, boosted);
}

}  // namespace

SolveResult dca_solve(const DcPair& pair, const SparsePolynomial& f, const FeasibleSet& set,
                      const Vector& x0, const SolverConfig& cfg) {
  return dc_solve(pair, f, set, x0, cfg, false);
}

SolveResult bdca_solve(const DcPair& pair, const SparsePolynomial& f, const FeasibleSet& set,
                       const Vector& x0, const SolverConfig& cfg) {
  return dc_solve(pair, f, set, x0, cfg, true);
}

SolveResult udca_solve(const UniversalPair& up, const SparsePolynomial& f, const FeasibleSet& set,
                       const Vector& x0, const SolverConfig& cfg) {
  return universal_solve(up, f, set, x0, cfg, false);
}

SolveResult ubdca_solve(const UniversalPair& up, const SparsePolynomial& f,
                        const FeasibleSet& set, const Vector& x0, const SolverConfig& cfg) {
  return universal_solve(up, f, set, x0, cfg, true);
}

void write_trace_csv(std::ostream& out, const SolveResult& result) {
  out << "k,f,df,dx,alpha,ls_trials,descent_ip,kkt_residual\n";
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    const auto& r = result.trace[i];
    out << fmt::format("{},{:.17g},{:.6e},{:.6e},{:.6e},{},{:.6e},", r.k, r.f, r.df, r.dx, r.alpha,
                       r.ls_trials, r.descent_ip);
    if (i + 1 == result.trace.size()) out << fmt::format("{:.6e}", result.kkt_residual);
    out << '\n';
  }
}

}  // namespace mvsk
