#include "mvsk/moments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

namespace mvsk {

namespace {

constexpr std::size_t kMaxOrder = 4;

using Tuple = std::array<std::size_t, kMaxOrder>;

Tuple sorted_copy(std::span<const std::size_t> indices) {
  Tuple t{};
  std::copy(indices.begin(), indices.end(), t.begin());
  std::sort(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(indices.size()));
  return t;
}

void check_indices(std::span<const std::size_t> indices, std::size_t n) {
  for (std::size_t idx : indices) {
    if (idx >= n) {
      throw std::out_of_range(fmt::format("tensor index {} out of range for n = {}", idx, n));
    }
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Centered deviations, n x T.
Matrix centered(const ReturnMatrix& returns, const Vector& mu) {
  require_dimension(mu.size(), static_cast<Eigen::Index>(returns.assets()), "centered returns");
  return returns.values().colwise() - mu;
}

double product_moment(const Matrix& dev, std::span<const std::size_t> idx) {
  double sum = 0.0;
  for (Eigen::Index t = 0; t < dev.cols(); ++t) {
    double p = 1.0;
    for (std::size_t i : idx) p *= dev(static_cast<Eigen::Index>(i), t);
    sum += p;
  }
  return sum / static_cast<double>(dev.cols());
}

}  // namespace

// ---------------------------------------------------------------------------
// Combinatorics

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::size_t packed_rank(std::span<const std::size_t> sorted_indices) {
  std::size_t rank = 0;
  for (std::size_t m = 0; m < sorted_indices.size(); ++m) {
    rank += binomial(sorted_indices[m] + m, m + 1);
  }
  return rank;
}

unsigned permutation_multiplicity(std::span<const std::size_t> sorted_indices) {
  static constexpr unsigned kFactorial[] = {1, 1, 2, 6, 24};
  unsigned denom = 1;
  std::size_t run = 1;
  for (std::size_t m = 1; m <= sorted_indices.size(); ++m) {
    if (m < sorted_indices.size() && sorted_indices[m] == sorted_indices[m - 1]) {
      ++run;
    } else {
      denom *= kFactorial[run];
      run = 1;
    }
  }
  return kFactorial[sorted_indices.size()] / denom;
}

// ---------------------------------------------------------------------------
// ReturnMatrix and CSV

ReturnMatrix::ReturnMatrix(Matrix values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.rows() < 1) throw std::invalid_argument("return matrix needs at least one asset");
  if (values_.cols() < 2) {
    throw std::invalid_argument("return matrix needs at least two periods (T >= 2)");
  }
  if (!values_.allFinite()) throw std::invalid_argument("return matrix has non-finite entries");
  if (!labels_.empty() && labels_.size() != assets()) {
    throw std::invalid_argument("label count does not match asset count");
  }
}

ReturnMatrix read_returns_csv(std::istream& in) {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (auto cell : cells) {
      auto v = parse_number(cell);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError(fmt::format("line {}: expected {} cells, found {}", line_no, width,
                                   cells.size()));
    }
    if (!numeric) {
      if (rows.empty() && labels.empty()) {
        for (auto cell : cells) labels.emplace_back(trim(cell));
        continue;
      }
      throw ParseError(fmt::format("line {}: non-numeric data cell", line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no data rows");
  Matrix values(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t i = 0; i < width; ++i) {
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = rows[t][i];
    }
  }
  try {
    return ReturnMatrix(std::move(values), std::move(labels));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

ReturnMatrix read_returns_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_returns_csv(in);
}

void write_returns_csv(std::ostream& out, const ReturnMatrix& returns) {
  const auto n = returns.assets();
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out << ',';
    out << (returns.labels().empty() ? fmt::format("A{}", i + 1) : returns.labels()[i]);
  }
  out << '\n';
  for (std::size_t t = 0; t < returns.periods(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (i) out << ',';
      out << fmt::format("{:.17g}", returns.values()(static_cast<Eigen::Index>(i),
                                                     static_cast<Eigen::Index>(t)));
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Estimators

SymmetricTensor::SymmetricTensor(std::size_t n, unsigned order)
    : n_(n), order_(order), values_(binomial(n + order - 1, order), 0.0) {
  if (order < 2 || order > kMaxOrder) throw std::invalid_argument("tensor order must be 2..4");
}

std::size_t SymmetricTensor::slot(std::span<const std::size_t> indices) const {
  if (indices.size() != order_) throw std::invalid_argument("tensor index arity mismatch");
  check_indices(indices, n_);
  const auto t = sorted_copy(indices);
  return packed_rank(std::span(t.data(), indices.size()));
}

double SymmetricTensor::at(std::span<const std::size_t> indices) const {
  return values_[slot(indices)];
}

void SymmetricTensor::set(std::span<const std::size_t> indices, double value) {
  values_[slot(indices)] = value;
}

Vector estimate_mean(const ReturnMatrix& returns) { return returns.values().rowwise().mean(); }

Matrix estimate_covariance(const ReturnMatrix& returns, const Vector& mu) {
  if (returns.periods() < 2) throw std::invalid_argument("covariance needs T >= 2");
  const Matrix dev = centered(returns, mu);
  Matrix sigma = dev * dev.transpose() / static_cast<double>(returns.periods() - 1);
  // exact symmetry
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) sigma(i, j) = sigma(j, i);
  }
  return sigma;
}

SymmetricTensor estimate_coskewness(const ReturnMatrix& returns, const Vector& mu) {
  const Matrix dev = centered(returns, mu);
  const auto n = returns.assets();
  SymmetricTensor s(n, 3);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j <= k; ++j)
      for (std::size_t i = 0; i <= j; ++i) {
        const std::array<std::size_t, 3> idx{i, j, k};
        s.set(idx, product_moment(dev, idx));
      }
  return s;
}

SymmetricTensor estimate_cokurtosis(const ReturnMatrix& returns, const Vector& mu) {
  const Matrix dev = centered(returns, mu);
  const auto n = returns.assets();
  SymmetricTensor kt(n, 4);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k <= l; ++k)
      for (std::size_t j = 0; j <= k; ++j)
        for (std::size_t i = 0; i <= j; ++i) {
          const std::array<std::size_t, 4> idx{i, j, k, l};
          kt.set(idx, product_moment(dev, idx));
        }
  return kt;
}

// ---------------------------------------------------------------------------
// MomentTensors

struct MomentTensors::Data {
  std::size_t n = 0;
  MomentBackend backend = MomentBackend::Materialized;
  Vector mu;
  SymmetricTensor sigma;
  SymmetricTensor skew;  // empty for JustInTime
  SymmetricTensor kurt;  // empty for JustInTime
  Matrix deviations;     // n x T, JustInTime only
};

const MomentTensors::Data& MomentTensors::data() const {
  static const Data empty{};
  return data_ ? *data_ : empty;
}

MomentTensors MomentTensors::from_returns(const ReturnMatrix& returns, MomentBackend backend) {
  auto d = std::make_shared<Data>();
  d->n = returns.assets();
  d->backend = backend;
  d->mu = estimate_mean(returns);
  const Matrix cov = estimate_covariance(returns, d->mu);
  d->sigma = SymmetricTensor(d->n, 2);
  for (std::size_t j = 0; j < d->n; ++j)
    for (std::size_t i = 0; i <= j; ++i) {
      const std::array<std::size_t, 2> idx{i, j};
      d->sigma.set(idx, cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  if (backend == MomentBackend::Materialized) {
    d->skew = estimate_coskewness(returns, d->mu);
    d->kurt = estimate_cokurtosis(returns, d->mu);
  } else {
    d->deviations = centered(returns, d->mu);
  }
  return MomentTensors(std::move(d));
}

MomentTensors MomentTensors::from_functions(Vector mu, const Matrix& sigma, const SkewFn& skew,
                                            const KurtFn& kurt) {
  const auto n = static_cast<std::size_t>(mu.size());
  require_dimension(sigma.rows(), mu.size(), "sigma rows");
  require_dimension(sigma.cols(), mu.size(), "sigma cols");
  if (sigma != sigma.transpose()) {
    throw std::invalid_argument("sigma must be symmetric");
  }
  auto d = std::make_shared<Data>();
  d->n = n;
  d->mu = std::move(mu);
  d->sigma = SymmetricTensor(n, 2);
  d->skew = SymmetricTensor(n, 3);
  d->kurt = SymmetricTensor(n, 4);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t k = 0; k <= l; ++k) {
      const std::array<std::size_t, 2> p{k, l};
      d->sigma.set(p, sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)));
      for (std::size_t j = 0; j <= k; ++j) {
        const std::array<std::size_t, 3> t{j, k, l};
        d->skew.set(t, skew(j, k, l));
        for (std::size_t i = 0; i <= j; ++i) {
          const std::array<std::size_t, 4> q{i, j, k, l};
          d->kurt.set(q, kurt(i, j, k, l));
        }
      }
    }
  }
  return MomentTensors(std::move(d));
}

std::size_t MomentTensors::assets() const { return data().n; }
MomentBackend MomentTensors::backend() const { return data().backend; }
const Vector& MomentTensors::mu() const { return data().mu; }

double MomentTensors::entry(std::span<const std::size_t> indices) const {
  const Data& d = data();
  check_indices(indices, d.n);
  switch (indices.size()) {
    case 2:
      return d.sigma.at(indices);
    case 3:
    case 4: {
      if (d.backend == MomentBackend::JustInTime) return product_moment(d.deviations, indices);
      return indices.size() == 3 ? d.skew.at(indices) : d.kurt.at(indices);
    }
    default:
      throw std::invalid_argument("tensor entries take 2, 3 or 4 indices");
  }
}

double MomentTensors::sigma(std::size_t i, std::size_t j) const {
  const std::array<std::size_t, 2> idx{i, j};
  return entry(idx);
}

double MomentTensors::skew(std::size_t i, std::size_t j, std::size_t k) const {
  const std::array<std::size_t, 3> idx{i, j, k};
  return entry(idx);
}

double MomentTensors::kurt(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
  const std::array<std::size_t, 4> idx{i, j, k, l};
  return entry(idx);
}

Matrix MomentTensors::sigma_matrix() const {
  const auto n = static_cast<Eigen::Index>(assets());
  Matrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      m(i, j) = sigma(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return m;
}

std::array<std::size_t, 3> MomentTensors::independent_entry_counts() const {
  const auto n = assets();
  return {binomial(n + 1, 2), binomial(n + 2, 3), binomial(n + 3, 4)};
}

void MomentTensors::for_each_skew(
    const std::function<void(std::size_t, std::size_t, std::size_t, double)>& fn) const {
  const Data& d = data();
  const bool stored = d.backend == MomentBackend::Materialized;
  std::size_t rank = 0;
  for (std::size_t k = 0; k < d.n; ++k)
    for (std::size_t j = 0; j <= k; ++j)
      for (std::size_t i = 0; i <= j; ++i, ++rank) {
        const std::array<std::size_t, 3> idx{i, j, k};
        fn(i, j, k, stored ? d.skew.packed()[rank] : product_moment(d.deviations, idx));
      }
}

void MomentTensors::for_each_kurt(
    const std::function<void(std::size_t, std::size_t, std::size_t, std::size_t, double)>& fn)
    const {
  const Data& d = data();
  const bool stored = d.backend == MomentBackend::Materialized;
  std::size_t rank = 0;
  for (std::size_t l = 0; l < d.n; ++l)
    for (std::size_t k = 0; k <= l; ++k)
      for (std::size_t j = 0; j <= k; ++j)
        for (std::size_t i = 0; i <= j; ++i, ++rank) {
          const std::array<std::size_t, 4> idx{i, j, k, l};
          fn(i, j, k, l, stored ? d.kurt.packed()[rank] : product_moment(d.deviations, idx));
        }
}

// ---------------------------------------------------------------------------
// Portfolio moments

namespace {

void check_weights(const MomentTensors& t, const Vector& x) {
  require_dimension(x.size(), static_cast<Eigen::Index>(t.assets()), "portfolio weights");
  if (!x.allFinite()) throw std::invalid_argument("portfolio weights must be finite");
}

// Accumulates, for one monomial w * prod_m x[idx[m]], its gradient and
// (optionally) Hessian contributions.
template <std::size_t D>
void add_monomial_derivatives(const std::array<std::size_t, D>& idx, double w, const Vector& x,
                              Vector* grad, Matrix* hess) {
  for (std::size_t p = 0; p < D; ++p) {
    if (grad) {
      double prod = w;
      for (std::size_t r = 0; r < D; ++r)
        if (r != p) prod *= x[static_cast<Eigen::Index>(idx[r])];
      (*grad)[static_cast<Eigen::Index>(idx[p])] += prod;
    }
    if (hess) {
      for (std::size_t q = 0; q < D; ++q) {
        if (q == p) continue;
        double prod = w;
        for (std::size_t r = 0; r < D; ++r)
          if (r != p && r != q) prod *= x[static_cast<Eigen::Index>(idx[r])];
        (*hess)(static_cast<Eigen::Index>(idx[p]), static_cast<Eigen::Index>(idx[q])) += prod;
      }
    }
  }
}

}  // namespace

PortfolioMoments portfolio_moments(const MomentTensors& t, const Vector& x) {
  check_weights(t, x);
  PortfolioMoments m;
  const auto n = t.assets();
  m.m1 = t.mu().dot(x);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i)
      m.m2 += (i == j ? 1.0 : 2.0) * t.sigma(i, j) * x[static_cast<Eigen::Index>(i)] *
              x[static_cast<Eigen::Index>(j)];
  t.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
    const std::array<std::size_t, 3> idx{i, j, k};
    m.m3 += permutation_multiplicity(idx) * s * x[static_cast<Eigen::Index>(i)] *
            x[static_cast<Eigen::Index>(j)] * x[static_cast<Eigen::Index>(k)];
  });
  t.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    const std::array<std::size_t, 4> idx{i, j, k, l};
    m.m4 += permutation_multiplicity(idx) * v * x[static_cast<Eigen::Index>(i)] *
            x[static_cast<Eigen::Index>(j)] * x[static_cast<Eigen::Index>(k)] *
            x[static_cast<Eigen::Index>(l)];
  });
  return m;
}

PortfolioMomentGradients portfolio_moment_gradients(const MomentTensors& t, const Vector& x) {
  check_weights(t, x);
  const auto n = static_cast<Eigen::Index>(t.assets());
  PortfolioMomentGradients g;
  g.g1 = t.mu();
  g.g2 = 2.0 * (t.sigma_matrix() * x);
  g.g3 = Vector::Zero(n);
  g.g4 = Vector::Zero(n);
  t.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
    const std::array<std::size_t, 3> idx{i, j, k};
    add_monomial_derivatives(idx, permutation_multiplicity(idx) * s, x, &g.g3, nullptr);
  });
  t.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    const std::array<std::size_t, 4> idx{i, j, k, l};
    add_monomial_derivatives(idx, permutation_multiplicity(idx) * v, x, &g.g4, nullptr);
  });
  return g;
}

PortfolioMomentHessians portfolio_moment_hessians(const MomentTensors& t, const Vector& x) {
  check_weights(t, x);
  const auto n = static_cast<Eigen::Index>(t.assets());
  PortfolioMomentHessians h{Matrix::Zero(n, n), Matrix::Zero(n, n)};
  t.for_each_skew([&](std::size_t i, std::size_t j, std::size_t k, double s) {
    const std::array<std::size_t, 3> idx{i, j, k};
    add_monomial_derivatives(idx, permutation_multiplicity(idx) * s, x, nullptr, &h.m3);
  });
  t.for_each_kurt([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    const std::array<std::size_t, 4> idx{i, j, k, l};
    add_monomial_derivatives(idx, permutation_multiplicity(idx) * v, x, nullptr, &h.m4);
  });
  return h;
}

}  // namespace mvsk
