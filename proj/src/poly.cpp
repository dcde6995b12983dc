#include "mvsk/poly.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace mvsk {

namespace {

void check_same_vars(const SparsePolynomial& p, const SparsePolynomial& q) {
  require_dimension(static_cast<Eigen::Index>(q.nvars()), static_cast<Eigen::Index>(p.nvars()),
                    "polynomial variables");
}

Monomial multiply_monomials(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      out.push_back(*ia++);
    } else if (ia == a.end() || ib->first < ia->first) {
      out.push_back(*ib++);
    } else {
      out.emplace_back(ia->first, ia->second + ib->second);
      ++ia;
      ++ib;
    }
  }
  return out;
}

double monomial_value(const Monomial& m, const Vector& x) {
  double v = 1.0;
  for (const auto& [var, exp] : m) {
    const double xi = x[static_cast<Eigen::Index>(var)];
    for (std::uint32_t e = 0; e < exp; ++e) v *= xi;
  }
  return v;
}

}  // namespace

unsigned total_degree(const Monomial& m) {
  unsigned d = 0;
  for (const auto& vp : m) d += vp.second;
  return d;
}

Monomial monomial_from_indices(std::span<const std::size_t> indices) {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  Monomial m;
  for (std::size_t v : sorted) {
    if (!m.empty() && m.back().first == v) {
      ++m.back().second;
    } else {
      m.emplace_back(static_cast<std::uint32_t>(v), 1u);
    }
  }
  return m;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  const unsigned da = total_degree(a);
  const unsigned db = total_degree(b);
  if (da != db) return da < db;
  // Dense exponent vectors compared lexicographically; the larger one first.
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  return ia != a.end() && ib == b.end();
}

SparsePolynomial SparsePolynomial::constant(std::size_t nvars, double c) {
  SparsePolynomial p(nvars);
  p.add_term({}, c);
  p.prune();
  return p;
}

SparsePolynomial SparsePolynomial::variable(std::size_t nvars, std::size_t i) {
  return term(nvars, {{static_cast<std::uint32_t>(i), 1u}}, 1.0);
}

SparsePolynomial SparsePolynomial::term(std::size_t nvars, Monomial m, double coefficient) {
  for (const auto& [var, exp] : m) {
    if (var >= nvars) throw std::out_of_range(fmt::format("variable {} >= nvars {}", var, nvars));
    if (exp == 0) throw std::invalid_argument("monomial powers must be positive");
  }
  std::sort(m.begin(), m.end());
  SparsePolynomial p(nvars);
  p.add_term(m, coefficient);
  p.prune();
  return p;
}

void SparsePolynomial::add_term(const Monomial& m, double coefficient) {
  if (coefficient == 0.0) return;
  terms_[m] += coefficient;
}

void SparsePolynomial::prune() {
  std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) <= kPruneTolerance; });
}

unsigned SparsePolynomial::degree() const {
  unsigned d = 0;
  for (const auto& kv : terms_) d = std::max(d, total_degree(kv.first));
  return d;
}

double SparsePolynomial::coefficient(const Monomial& m) const {
  const auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double SparsePolynomial::eval(const Vector& x) const {
  require_dimension(x.size(), static_cast<Eigen::Index>(nvars_), "polynomial evaluation");
  double sum = 0.0;
  for (const auto& [m, c] : terms_) sum += c * monomial_value(m, x);
  return sum;
}

SparsePolynomial SparsePolynomial::derivative(std::size_t var) const {
  if (var >= nvars_) throw std::out_of_range("derivative variable out of range");
  SparsePolynomial d(nvars_);
  for (const auto& [m, c] : terms_) {
    auto it = std::find_if(m.begin(), m.end(), [&](const auto& vp) { return vp.first == var; });
    if (it == m.end()) continue;
    Monomial dm = m;
    auto& entry = dm[static_cast<std::size_t>(it - m.begin())];
    const double factor = entry.second;
    if (--entry.second == 0) dm.erase(dm.begin() + (it - m.begin()));
    d.add_term(dm, c * factor);
  }
  d.prune();
  return d;
}

std::vector<SparsePolynomial> SparsePolynomial::grad_exact() const {
  std::vector<SparsePolynomial> g;
  g.reserve(nvars_);
  for (std::size_t i = 0; i < nvars_; ++i) g.push_back(derivative(i));
  return g;
}

Vector SparsePolynomial::grad_numeric(const Vector& x, double delta) const {
  if (!(delta > 0.0)) throw std::invalid_argument("grad_numeric: delta must be positive");
  require_dimension(x.size(), static_cast<Eigen::Index>(nvars_), "grad_numeric");
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + delta;
    const double fp = eval(xp);
    xp[i] = x[i] - delta;
    const double fm = eval(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * delta);
  }
  return g;
}

void SparsePolynomial::dump(std::ostream& out) const {
  std::vector<std::uint32_t> dense(nvars_);
  for (const auto& [m, c] : terms_) {
    std::fill(dense.begin(), dense.end(), 0u);
    for (const auto& [var, exp] : m) dense[var] = exp;
    out << fmt::format("{:.17g}", c);
    for (auto e : dense) out << ' ' << e;
    out << '\n';
  }
}

std::string SparsePolynomial::dump() const {
  std::ostringstream os;
  dump(os);
  return os.str();
}

SparsePolynomial add(const SparsePolynomial& p, const SparsePolynomial& q) {
  check_same_vars(p, q);
  PolynomialAccumulator acc(p.nvars());
  acc.add(p, 1.0);
  acc.add(q, 1.0);
  return acc.finish();
}

SparsePolynomial scale(const SparsePolynomial& p, double a) {
  PolynomialAccumulator acc(p.nvars());
  acc.add(p, a);
  return acc.finish();
}

SparsePolynomial mul(const SparsePolynomial& p, const SparsePolynomial& q) {
  check_same_vars(p, q);
  PolynomialAccumulator acc(p.nvars());
  for (const auto& [mp, cp] : p.terms())
    for (const auto& [mq, cq] : q.terms()) acc.add_term(multiply_monomials(mp, mq), cp * cq);
  return acc.finish();
}

void PolynomialAccumulator::add_term(const Monomial& m, double coefficient) {
  result_.add_term(m, coefficient);
}

void PolynomialAccumulator::add(const SparsePolynomial& p, double a,
                                std::span<const std::uint32_t> remap) {
  if (remap.empty()) {
    check_same_vars(result_, p);
    for (const auto& [m, c] : p.terms()) result_.add_term(m, a * c);
    return;
  }
  require_dimension(static_cast<Eigen::Index>(remap.size()), static_cast<Eigen::Index>(p.nvars()),
                    "accumulator remap");
  Monomial mapped;
  for (const auto& [m, c] : p.terms()) {
    mapped.clear();
    for (const auto& [var, exp] : m) {
      const auto target = remap[var];
      if (target >= result_.nvars()) throw std::out_of_range("accumulator remap target out of range");
      mapped.emplace_back(target, exp);
    }
    std::sort(mapped.begin(), mapped.end());
    // merge repeated targets
    Monomial merged;
    for (const auto& vp : mapped) {
      if (!merged.empty() && merged.back().first == vp.first) {
        merged.back().second += vp.second;
      } else {
        merged.push_back(vp);
      }
    }
    result_.add_term(merged, a * c);
  }
}

SparsePolynomial PolynomialAccumulator::finish() {
  result_.prune();
  SparsePolynomial out = std::move(result_);
  result_ = SparsePolynomial(out.nvars());
  return out;
}

CompiledPolynomial::CompiledPolynomial(const SparsePolynomial& p) : nvars_(p.nvars()) {
  coefficients_.reserve(p.term_count());
  offsets_.reserve(p.term_count() + 1);
  offsets_.push_back(0);
  for (const auto& [m, c] : p.terms()) {
    coefficients_.push_back(c);
    for (const auto& [var, exp] : m)
      for (std::uint32_t e = 0; e < exp; ++e) vars_.push_back(var);
    offsets_.push_back(static_cast<std::uint32_t>(vars_.size()));
  }
}

double CompiledPolynomial::value(const Vector& x) const {
  require_dimension(x.size(), static_cast<Eigen::Index>(nvars_), "compiled polynomial");
  double sum = 0.0;
  for (std::size_t t = 0; t < coefficients_.size(); ++t) {
    double v = coefficients_[t];
    for (auto k = offsets_[t]; k < offsets_[t + 1]; ++k) v *= x[vars_[k]];
    sum += v;
  }
  return sum;
}

double CompiledPolynomial::value_and_gradient(const Vector& x, Vector& grad) const {
  require_dimension(x.size(), static_cast<Eigen::Index>(nvars_), "compiled polynomial");
  grad.setZero(static_cast<Eigen::Index>(nvars_));
  double sum = 0.0;
  double prefix[16];
  for (std::size_t t = 0; t < coefficients_.size(); ++t) {
    const auto begin = offsets_[t];
    const auto len = offsets_[t + 1] - begin;
    const double c = coefficients_[t];
    if (len > 15) throw std::logic_error("compiled polynomial degree above 15");
    prefix[0] = 1.0;
    for (std::uint32_t k = 0; k < len; ++k) prefix[k + 1] = prefix[k] * x[vars_[begin + k]];
    sum += c * prefix[len];
    double suffix = c;
    for (std::uint32_t k = len; k-- > 0;) {
      grad[vars_[begin + k]] += prefix[k] * suffix;
      suffix *= x[vars_[begin + k]];
    }
  }
  return sum;
}

Vector CompiledPolynomial::gradient(const Vector& x) const {
  Vector g;
  value_and_gradient(x, g);
  return g;
}

Matrix CompiledPolynomial::hessian(const Vector& x) const {
  require_dimension(x.size(), static_cast<Eigen::Index>(nvars_), "compiled polynomial");
  const auto n = static_cast<Eigen::Index>(nvars_);
  Matrix h = Matrix::Zero(n, n);
  for (std::size_t t = 0; t < coefficients_.size(); ++t) {
    const auto begin = offsets_[t];
    const auto end = offsets_[t + 1];
    for (auto p = begin; p < end; ++p)
      for (auto q = begin; q < end; ++q) {
        if (p == q) continue;
        double v = coefficients_[t];
        for (auto r = begin; r < end; ++r)
          if (r != p && r != q) v *= x[vars_[r]];
        h(vars_[p], vars_[q]) += v;
      }
  }
  return h;
}

}  // namespace mvsk
