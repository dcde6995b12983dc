#include "mvsk/frontier.hpp"

#include "mvsk/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>

namespace mvsk {

const char* to_string(InvestorKind k) {
  switch (k) {
    case InvestorKind::Neutral: return "neutral";
    case InvestorKind::Averse: return "averse";
    case InvestorKind::Seeking: return "seeking";
  }
  return "?";
}

std::optional<InvestorKind> parse_investor_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (auto k : {InvestorKind::Neutral, InvestorKind::Averse, InvestorKind::Seeking}) {
    if (lower == to_string(k)) return k;
  }
  return std::nullopt;
}

Preference sample_preference(InvestorKind kind, std::uint64_t seed) {
  Rng rng(seed);
  auto high = [&rng] { return rng.uniform(20.0, 22.0); };
  auto low = [&rng] { return rng.uniform(1.0, 3.0); };
  std::array<double, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    const bool even_moment = i % 2 == 1;  // c2, c4
    switch (kind) {
      case InvestorKind::Neutral: c[i] = high(); break;
      case InvestorKind::Averse: c[i] = even_moment ? high() : low(); break;
      case InvestorKind::Seeking: c[i] = even_moment ? low() : high(); break;
    }
  }
  return Preference(c);
}

std::vector<double> make_return_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("return grid needs step > 0 and lo <= hi");
  }
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) grid[k] = lo + static_cast<double>(k) * step;
  return grid;
}

const char* to_string(FrontierStatus s) {
  switch (s) {
    case FrontierStatus::Converged: return "CONVERGED";
    case FrontierStatus::MaxIter: return "MAX_ITER";
    case FrontierStatus::SubproblemFailure: return "SUBPROBLEM_FAILURE";
    case FrontierStatus::Infeasible: return "INFEASIBLE";
  }
  return "?";
}

std::vector<FrontierPoint> generate_frontier(const MomentTensors& tensors, const FrontierSpec& spec,
                                             const SolverConfig& cfg, Algorithm algo) {
  for (std::size_t k = 0; k < spec.r_grid.size(); ++k) {
    if (!std::isfinite(spec.r_grid[k])) throw std::invalid_argument("return grid is not finite");
    if (k > 0 && spec.r_grid[k] < spec.r_grid[k - 1]) {
      throw std::invalid_argument("return grid must be sorted ascending");
    }
  }
  const Preference c(0.0, spec.c[1], spec.c[2], spec.c[3]);
  const MvskModel model = build_model(tensors, c);
  const Vector& mu = tensors.mu();
  const auto n = tensors.assets();

  std::vector<FrontierPoint> out;
  out.reserve(spec.r_grid.size());
  std::optional<Vector> previous;
  for (double r : spec.r_grid) {
    FrontierPoint pt;
    pt.r = r;
    if (r < mu.minCoeff() || r > mu.maxCoeff()) {
      out.push_back(std::move(pt));
      continue;
    }
    const auto set = FeasibleSet::simplex_with_return(mu, r);
    const Vector start = set.project(previous ? *previous : random_binary_start(n, spec.seed));
    const auto res = solve(model, algo, set, start, cfg);
    switch (res.status) {
      case SolveStatus::Converged: pt.status = FrontierStatus::Converged; break;
      case SolveStatus::MaxIter: pt.status = FrontierStatus::MaxIter; break;
      case SolveStatus::SubproblemFailure: pt.status = FrontierStatus::SubproblemFailure; break;
    }
    pt.x = res.x_star;
    pt.moments = portfolio_moments(tensors, pt.x);
    pt.iterations = res.iterations;
    previous = pt.x;
    out.push_back(std::move(pt));
  }
  return out;
}

void write_frontier_csv(std::ostream& out, const std::vector<FrontierPoint>& points,
                        std::size_t n) {
  out << "r,m1,m2,m3,m4,status";
  for (std::size_t i = 1; i <= n; ++i) out << ",x_" << i;
  out << '\n';
  for (const auto& p : points) {
    out << fmt::format("{:.12g}", p.r);
    if (p.status == FrontierStatus::Infeasible) {
      out << ",,,,," << to_string(p.status) << std::string(n, ',') << '\n';
      continue;
    }
    out << fmt::format(",{:.12g},{:.12g},{:.12g},{:.12g},{}", p.moments.m1, p.moments.m2,
                       p.moments.m3, p.moments.m4, to_string(p.status));
    for (Eigen::Index i = 0; i < p.x.size(); ++i) out << fmt::format(",{:.12g}", p.x[i]);
    out << '\n';
  }
}

}  // namespace mvsk
