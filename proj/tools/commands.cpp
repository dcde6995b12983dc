#include "commands.hpp"

#include "mvsk/dca.hpp"
#include "mvsk/frontier.hpp"
#include "mvsk/random.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace mvsk::cli {

namespace {

using json = nlohmann::json;

/// Bad flag values or unreadable input files.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::uint64_t seed = 1;
  SolverConfig cfg;
  std::string stop_mode = "df";
  bool jit = false;
};

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    auto cell = rest.substr(0, comma);
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
    while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      throw UsageError(fmt::format("{}: '{}' is not a number", what, std::string(cell)));
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

Preference named_profile(const std::string& name) {
  if (name == "seeking") return Preference(10, 1, 10, 1);
  if (name == "averse") return Preference(1, 10, 1, 10);
  if (name == "neutral") return Preference(10, 10, 10, 10);
  throw UsageError("unknown profile '" + name + "' (seeking, averse, neutral)");
}

Preference parse_preference(const std::string& text) {
  const auto v = parse_numbers(text, "--c");
  if (v.size() != 4) throw UsageError("--c needs four comma-separated weights");
  try {
    return Preference(std::array<double, 4>{v[0], v[1], v[2], v[3]});
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--c: ") + e.what());
  }
}

ReturnMatrix load_returns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return read_returns_csv(in);
  } catch (const ParseError& e) {
    throw UsageError(path + ": " + e.what());
  }
}

MomentTensors load_tensors(const std::string& path, bool jit) {
  return MomentTensors::from_returns(load_returns(path),
                                     jit ? MomentBackend::JustInTime : MomentBackend::Materialized);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  return f;
}

/// Writes to `path`, or to `out` when the path is empty or "-".
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(out);
  } else {
    auto f = open_output(path);
    fn(f);
  }
}

Algorithm algorithm_flag(const std::string& name) {
  const auto a = parse_algorithm(name);
  if (!a) throw UsageError("unknown algorithm '" + name + "' (dca, bdca, udca, ubdca)");
  return *a;
}

void add_solver_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "RNG seed")->capture_default_str();
  cmd->add_option("--eps1", o.cfg.eps1, "relative objective tolerance")->capture_default_str();
  cmd->add_option("--eps2", o.cfg.eps2, "relative step tolerance")->capture_default_str();
  cmd->add_option("--beta", o.cfg.beta, "line-search reduction factor")->capture_default_str();
  cmd->add_option("--sigma", o.cfg.sigma, "Armijo parameter")->capture_default_str();
  cmd->add_option("--eps-ls", o.cfg.eps_ls, "line-search floor")->capture_default_str();
  cmd->add_option("--max-iter", o.cfg.max_outer_iter, "outer iteration cap")->capture_default_str();
  cmd->add_option("--sub-tol", o.cfg.sub_tol, "subproblem tolerance")->capture_default_str();
  cmd->add_option("--sub-max-iter", o.cfg.sub_max_iter, "subproblem iteration cap")
      ->capture_default_str();
  cmd->add_option("--stop-mode", o.stop_mode, "df (objective only) or df-dx")
      ->check(CLI::IsMember({"df", "df-dx"}))
      ->capture_default_str();
  cmd->add_flag("--jit-moments", o.jit, "compute co-moment entries on demand");
}

void finalize(CommonOptions& o) {
  o.cfg.stop_mode = o.stop_mode == "df-dx" ? StopMode::DfAndDx : StopMode::DfOnly;
  try {
    o.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

json vector_json(const Vector& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

// ---------------------------------------------------------------------------

struct GenOptions {
  std::size_t n = 4;
  std::size_t T = 30;
  std::uint64_t seed = 1;
  double low = -0.1;
  double high = 0.4;
  std::string output;
};

void cmd_gen(const GenOptions& o, std::ostream& out) {
  ReturnMatrix r = [&] {
    try {
      return generate_returns(o.n, o.T, o.seed, o.low, o.high);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }();
  emit(o.output, out, [&](std::ostream& os) { write_returns_csv(os, r); });
}

struct MomentsOptions {
  std::string data;
  bool jit = false;
  std::string output;
};

void cmd_moments(const MomentsOptions& o, std::ostream& out) {
  const auto returns = load_returns(o.data);
  const auto t = MomentTensors::from_returns(
      returns, o.jit ? MomentBackend::JustInTime : MomentBackend::Materialized);
  json j;
  j["n"] = t.assets();
  j["T"] = returns.periods();
  j["backend"] = o.jit ? "jit" : "materialized";
  j["mu"] = vector_json(t.mu());
  json sigma = json::array();
  const Matrix s = t.sigma_matrix();
  for (Eigen::Index i = 0; i < s.rows(); ++i) sigma.push_back(vector_json(s.row(i).transpose()));
  j["sigma"] = sigma;
  const auto counts = t.independent_entry_counts();
  j["independent_entries"] = {{"sigma", counts[0]}, {"skew", counts[1]}, {"kurt", counts[2]}};
  json skew = json::array();
  t.for_each_skew([&](std::size_t a, std::size_t b, std::size_t c, double v) {
    skew.push_back({a + 1, b + 1, c + 1, v});
  });
  json kurt = json::array();
  t.for_each_kurt([&](std::size_t a, std::size_t b, std::size_t c, std::size_t d, double v) {
    kurt.push_back({a + 1, b + 1, c + 1, d + 1, v});
  });
  j["skew"] = skew;
  j["kurt"] = kurt;
  emit(o.output, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

struct SolveOptions {
  std::string data;
  std::string c;
  std::string profile;
  std::string algo = "bdca";
  std::string x0;
  std::string trace;
  std::string dump_objective;
  std::string dump_dc;
  CommonOptions common;
};

Preference preference_from(const std::string& c, const std::string& profile) {
  if (!c.empty() && !profile.empty()) throw UsageError("give either --c or --profile, not both");
  if (!c.empty()) return parse_preference(c);
  return named_profile(profile.empty() ? "neutral" : profile);
}

void write_dc_dump(std::ostream& os, const MvskModel& m) {
  const auto n = m.f.nvars();
  PolynomialAccumulator hbar(n);
  for (std::size_t i = 0; i < n; ++i) {
    hbar.add_term(Monomial{{static_cast<std::uint32_t>(i), 2u}}, 0.5 * m.universal.eta);
  }
  hbar.add(m.f, -1.0);
  const auto h_bar = hbar.finish();
  os << fmt::format("# eta {:.17g}\n", m.universal.eta);
  os << fmt::format("# G terms {}\n", m.dc.g.value.term_count());
  m.dc.g.value.dump(os);
  os << fmt::format("# H terms {}\n", m.dc.h.value.term_count());
  m.dc.h.value.dump(os);
  os << fmt::format("# H_bar terms {}\n", h_bar.term_count());
  h_bar.dump(os);
}

int cmd_solve(SolveOptions& o, std::ostream& out, std::ostream& err) {
  finalize(o.common);
  const Algorithm algo = algorithm_flag(o.algo);
  const Preference c = preference_from(o.c, o.profile);
  const auto tensors = load_tensors(o.data, o.common.jit);
  const auto n = tensors.assets();
  const auto set = FeasibleSet::simplex(n);

  Vector x0;
  if (o.x0.empty()) {
    x0 = random_binary_start(n, o.common.seed);
  } else {
    const auto v = parse_numbers(o.x0, "--x0");
    if (v.size() != n) throw UsageError(fmt::format("--x0 has {} entries, expected {}", v.size(), n));
    x0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    if (!set.contains(x0, 1e-9)) {
      err << "warning: --x0 is not in the simplex; using its projection\n";
      x0 = set.project(x0);
    }
  }

  const MvskModel model = build_model(tensors, c);
  if (!o.dump_objective.empty()) {
    auto f = open_output(o.dump_objective);
    model.f.dump(f);
  }
  if (!o.dump_dc.empty()) {
    auto f = open_output(o.dump_dc);
    write_dc_dump(f, model);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult res = solve(model, algo, set, x0, o.common.cfg);
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  if (!o.trace.empty()) {
    auto f = open_output(o.trace);
    write_trace_csv(f, res);
  }
  json j;
  j["algorithm"] = to_string(algo);
  j["f_star"] = res.f_star;
  j["x_star"] = vector_json(res.x_star);
  j["iterations"] = res.iterations;
  j["time_ms"] = ms;
  j["kkt_residual"] = res.kkt_residual;
  j["status"] = to_string(res.status);
  out << j.dump(2) << '\n';
  if (res.status == SolveStatus::SubproblemFailure) {
    err << "error: " << res.message << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

struct BenchOptions {
  std::vector<std::string> data;
  std::vector<std::size_t> sizes;
  std::size_t T = 30;
  std::vector<std::string> profiles{"seeking", "averse", "neutral"};
  std::string output;
  CommonOptions common;
};

struct BenchInstance {
  std::string label;
  std::string profile;
  std::function<ReturnMatrix()> returns;
  std::uint64_t x0_seed;
};

int cmd_bench(BenchOptions& o, std::ostream& out, std::ostream& err) {
  finalize(o.common);
  for (const auto& p : o.profiles) named_profile(p);  // validate early

  std::vector<BenchInstance> instances;
  for (std::size_t d = 0; d < o.data.size(); ++d) {
    for (std::size_t p = 0; p < o.profiles.size(); ++p) {
      const auto path = o.data[d];
      instances.push_back({path, o.profiles[p], [path] { return load_returns(path); },
                           mix_seed(o.common.seed, 1000 + d)});
    }
  }
  for (std::size_t n : o.sizes) {
    for (std::size_t p = 0; p < o.profiles.size(); ++p) {
      const std::uint64_t data_seed = mix_seed(o.common.seed, n * 16 + p);
      const std::size_t T = o.T;
      instances.push_back({fmt::format("gen:n={}", n), o.profiles[p],
                           [n, T, data_seed] { return generate_returns(n, T, data_seed); },
                           mix_seed(data_seed, 7)});
    }
  }

  constexpr std::array<Algorithm, 4> kAlgos{Algorithm::Dca, Algorithm::Bdca, Algorithm::Udca,
                                            Algorithm::Ubdca};
  std::string header = "instance,profile,n,T,monos";
  for (auto a : kAlgos) {
    header += fmt::format(",{0}_iter,{0}_time_s,{0}_obj", to_string(a));
  }
  header += ",status";

  std::vector<double> sums(3 + 3 * kAlgos.size(), 0.0);
  std::size_t ok_rows = 0;
  bool any_failure = false;
  emit(o.output, out, [&](std::ostream& os) {
    os << header << '\n';
    for (const auto& inst : instances) {
      std::string row;
      std::vector<double> vals;
      std::string status = "OK";
      try {
        const auto returns = inst.returns();
        const auto tensors = MomentTensors::from_returns(
            returns, o.common.jit ? MomentBackend::JustInTime : MomentBackend::Materialized);
        const auto n = tensors.assets();
        const MvskModel model = build_model(tensors, named_profile(inst.profile));
        const auto set = FeasibleSet::simplex(n);
        const Vector x0 = random_binary_start(n, inst.x0_seed);
        vals = {static_cast<double>(n), static_cast<double>(returns.periods()),
                static_cast<double>(model.f.term_count())};
        row = fmt::format("{},{},{},{},{}", inst.label, inst.profile, n, returns.periods(),
                          model.f.term_count());
        for (auto a : kAlgos) {
          const auto t0 = std::chrono::steady_clock::now();
          const auto res = solve(model, a, set, x0, o.common.cfg);
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          row += fmt::format(",{},{:.6f},{:.12g}", res.iterations, secs, res.f_star);
          vals.insert(vals.end(), {static_cast<double>(res.iterations), secs, res.f_star});
          if (res.status != SolveStatus::Converged && status == "OK") {
            status = fmt::format("{}:{}", to_string(a), to_string(res.status));
          }
        }
      } catch (const std::exception& e) {
        any_failure = true;
        err << "error: " << inst.label << " (" << inst.profile << "): " << e.what() << '\n';
        os << fmt::format("{},{},,,{},FAILED\n", inst.label, inst.profile,
                          std::string(3 * kAlgos.size(), ','));
        continue;
      }
      os << row << ',' << status << '\n';
      for (std::size_t k = 0; k < vals.size(); ++k) sums[k] += vals[k];
      ++ok_rows;
    }
    if (ok_rows > 0) {
      std::string avg = "average,";
      for (double s : sums) avg += fmt::format(",{:.6g}", s / static_cast<double>(ok_rows));
      os << avg << ",\n";
    }
  });
  return any_failure ? kExitSolver : kExitOk;
}

struct FrontierOptions {
  std::string data;
  std::string investor;
  std::string c;
  std::string algo = "bdca";
  double r_lo = 0.0;
  double r_hi = 0.4;
  double r_step = 0.001;
  std::string output;
  CommonOptions common;
};

int cmd_frontier(FrontierOptions& o, std::ostream& out, std::ostream& err) {
  finalize(o.common);
  const Algorithm algo = algorithm_flag(o.algo);
  FrontierSpec spec;
  if (!o.c.empty() && !o.investor.empty()) {
    throw UsageError("give either --c or --investor, not both");
  }
  if (!o.c.empty()) {
    spec.c = parse_preference(o.c);
  } else {
    const auto kind = parse_investor_kind(o.investor.empty() ? "neutral" : o.investor);
    if (!kind) throw UsageError("unknown investor '" + o.investor + "' (neutral, averse, seeking)");
    spec.c = sample_preference(*kind, o.common.seed);
  }
  if (spec.c[0] != 0.0) err << "warning: c1 is ignored by the frontier objective\n";
  try {
    spec.r_grid = make_return_grid(o.r_lo, o.r_hi, o.r_step);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  spec.seed = o.common.seed;
  const auto tensors = load_tensors(o.data, o.common.jit);
  const auto points = generate_frontier(tensors, spec, o.common.cfg, algo);
  emit(o.output, out, [&](std::ostream& os) { write_frontier_csv(os, points, tensors.assets()); });
  const bool failed = std::any_of(points.begin(), points.end(), [](const FrontierPoint& p) {
    return p.status == FrontierStatus::SubproblemFailure;
  });
  return failed ? kExitSolver : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-variance-skewness-kurtosis portfolio optimization with DC algorithms",
               "mvsk"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "write synthetic uniform returns as CSV");
  g->add_option("--n", gen.n, "assets")->capture_default_str();
  g->add_option("--T", gen.T, "periods")->capture_default_str();
  g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  g->add_option("--low", gen.low, "lower return bound")->capture_default_str();
  g->add_option("--high", gen.high, "upper return bound")->capture_default_str();
  g->add_option("-o,--output", gen.output, "output path (default stdout)");

  MomentsOptions mom;
  auto* m = app.add_subcommand("moments", "estimate moments and co-moments as JSON");
  m->add_option("data", mom.data, "returns CSV")->required();
  m->add_flag("--jit-moments", mom.jit, "compute co-moment entries on demand");
  m->add_option("-o,--output", mom.output, "output path (default stdout)");

  SolveOptions sol;
  auto* s = app.add_subcommand("solve", "solve one MVSK model");
  s->add_option("data", sol.data, "returns CSV")->required();
  s->add_option("--c", sol.c, "preference weights c1,c2,c3,c4");
  s->add_option("--profile", sol.profile, "seeking, averse or neutral");
  s->add_option("--algo", sol.algo, "dca, bdca, udca or ubdca")->capture_default_str();
  s->add_option("--x0", sol.x0, "starting weights, comma separated");
  s->add_option("--trace", sol.trace, "write the iteration trace CSV here");
  s->add_option("--dump-objective", sol.dump_objective, "write the objective polynomial here");
  s->add_option("--dump-dc", sol.dump_dc, "write G, H, eta and H_bar here");
  add_solver_flags(s, sol.common);

  BenchOptions bench;
  auto* b = app.add_subcommand("bench", "run all four solvers on a set of instances");
  b->add_option("--data", bench.data, "returns CSV files");
  b->add_option("--n", bench.sizes, "generated instance sizes")->delimiter(',');
  b->add_option("--T", bench.T, "periods for generated instances")->capture_default_str();
  b->add_option("--profiles", bench.profiles, "preference profiles")
      ->delimiter(',')
      ->capture_default_str();
  b->add_option("-o,--output", bench.output, "output path (default stdout)");
  add_solver_flags(b, bench.common);

  FrontierOptions fr;
  auto* f = app.add_subcommand("frontier", "sweep return-constrained models over a grid");
  f->add_option("data", fr.data, "returns CSV")->required();
  f->add_option("--investor", fr.investor, "neutral, averse or seeking (sampled weights)");
  f->add_option("--c", fr.c, "explicit weights c1,c2,c3,c4");
  f->add_option("--algo", fr.algo, "dca, bdca, udca or ubdca")->capture_default_str();
  f->add_option("--r-lo", fr.r_lo, "first target return")->capture_default_str();
  f->add_option("--r-hi", fr.r_hi, "last target return")->capture_default_str();
  f->add_option("--r-step", fr.r_step, "grid step")->capture_default_str();
  f->add_option("-o,--output", fr.output, "output path (default stdout)");
  add_solver_flags(f, fr.common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*g) {
      cmd_gen(gen, out);
      return kExitOk;
    }
    if (*m) {
      cmd_moments(mom, out);
      return kExitOk;
    }
    if (*s) return cmd_solve(sol, out, err);
    if (*b) return cmd_bench(bench, out, err);
    if (*f) return cmd_frontier(fr, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitUsage;
}

}  // namespace mvsk::cli
