/**
 * @file moments.hpp
 * @brief Sample moments and co-moments of asset returns, and the portfolio
 *     moments m1..m4 built from them.
 *
 * Co-skewness and co-kurtosis are fully symmetric tensors, so only entries
 * with sorted index tuples are kept: C(n+1,2), C(n+2,3) and C(n+3,4) values
 * for the covariance, co-skewness and co-kurtosis respectively. Reads with any
 * permutation of an index tuple resolve to the same stored value.
 *
 * Two backends share one read contract:
 *  - Materialized: every sorted entry is computed once and stored.
 *  - JustInTime:   co-skewness and co-kurtosis entries are recomputed from the
 *                  centered return data on every read; nothing of size
 *                  O(n^3) or O(n^4) is held in memory.
 *
 * MomentTensors is immutable after construction and cheap to copy (shared
 * state); concurrent reads are safe.
 */
#pragma once

#include "mvsk/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mvsk {

/// Asset returns: n assets (rows) by T periods (columns).
class ReturnMatrix {
 public:
  /// @throws std::invalid_argument if n < 1, T < 2, a value is not finite,
  ///     or labels are given with the wrong count.
  explicit ReturnMatrix(Matrix values, std::vector<std::string> labels = {});

  std::size_t assets() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t periods() const { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  Matrix values_;
  std::vector<std::string> labels_;
};

/// Rows are periods, columns are assets. A first row that is not fully
/// numeric is taken as the asset labels.
/// @throws ParseError on ragged rows or non-numeric data cells.
ReturnMatrix read_returns_csv(std::istream& in);
ReturnMatrix read_returns_csv(const std::string& path);
void write_returns_csv(std::ostream& out, const ReturnMatrix& returns);

/// Fully symmetric tensor of order 2..4 over n indices, stored once per
/// sorted index tuple.
class SymmetricTensor {
 public:
  SymmetricTensor() = default;
  SymmetricTensor(std::size_t n, unsigned order);

  std::size_t dimension() const { return n_; }
  unsigned order() const { return order_; }
  std::size_t stored_entries() const { return values_.size(); }
  const std::vector<double>& packed() const { return values_; }

  /// Read with indices in any order.
  double at(std::span<const std::size_t> indices) const;
  /// Write through any permutation of the tuple.
  void set(std::span<const std::size_t> indices, double value);

 private:
  std::size_t slot(std::span<const std::size_t> indices) const;

  std::size_t n_ = 0;
  unsigned order_ = 0;
  std::vector<double> values_;
};

Vector estimate_mean(const ReturnMatrix& returns);
/// Sample covariance with the 1/(T-1) normalisation.
/// @throws std::invalid_argument if T < 2 or mu has the wrong size
Matrix estimate_covariance(const ReturnMatrix& returns, const Vector& mu);
/// S_{i,j,k} = (1/T) sum_t (R_it - mu_i)(R_jt - mu_j)(R_kt - mu_k)
SymmetricTensor estimate_coskewness(const ReturnMatrix& returns, const Vector& mu);
/// K_{i,j,k,l} = (1/T) sum_t of the product of four centered deviations
SymmetricTensor estimate_cokurtosis(const ReturnMatrix& returns, const Vector& mu);

enum class MomentBackend { Materialized, JustInTime };

class MomentTensors {
 public:
  /// Empty tensors (n = 0). Every entry read throws.
  MomentTensors() = default;

  static MomentTensors from_returns(const ReturnMatrix& returns,
                                    MomentBackend backend = MomentBackend::Materialized);

  using SkewFn = std::function<double(std::size_t, std::size_t, std::size_t)>;
  using KurtFn = std::function<double(std::size_t, std::size_t, std::size_t, std::size_t)>;

  /// Hand-built tensors. sigma must be symmetric; skew and kurt are only
  /// queried on sorted tuples.
  static MomentTensors from_functions(Vector mu, const Matrix& sigma, const SkewFn& skew,
                                      const KurtFn& kurt);

  std::size_t assets() const;
  MomentBackend backend() const;
  const Vector& mu() const;

  double sigma(std::size_t i, std::size_t j) const;
  double skew(std::size_t i, std::size_t j, std::size_t k) const;
  double kurt(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const;

  /// Generic symmetric read for 2, 3 or 4 indices in any order.
  /// @throws std::out_of_range for an index >= n (including n = 0)
  /// @throws std::invalid_argument for a tuple length outside 2..4
  double entry(std::span<const std::size_t> indices) const;

  /// Dense covariance, mirrored from the packed storage.
  Matrix sigma_matrix() const;

  /// Number of independent entries held (or addressable, for JustInTime).
  std::array<std::size_t, 3> independent_entry_counts() const;

  /// Visit every sorted triple i <= j <= k with its value.
  void for_each_skew(
      const std::function<void(std::size_t, std::size_t, std::size_t, double)>& fn) const;
  /// Visit every sorted quadruple i <= j <= k <= l with its value.
  void for_each_kurt(const std::function<void(std::size_t, std::size_t, std::size_t, std::size_t,
                                              double)>& fn) const;

  struct Data;

 private:
  explicit MomentTensors(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  const Data& data() const;

  std::shared_ptr<const Data> data_;
};

/// Number of distinct orderings of a sorted index tuple (multinomial
/// coefficient d! / prod(count!)).
unsigned permutation_multiplicity(std::span<const std::size_t> sorted_indices);

/// Rank of a sorted tuple inside packed symmetric storage (colex order of the
/// multiset). Ranks are dense in [0, C(n+d-1, d)).
std::size_t packed_rank(std::span<const std::size_t> sorted_indices);

std::size_t binomial(std::size_t n, std::size_t k);

struct PortfolioMoments {
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
};

struct PortfolioMomentGradients {
  Vector g1;
  Vector g2;
  Vector g3;
  Vector g4;
};

struct PortfolioMomentHessians {
  Matrix m3;  ///< (6 sum_k S_ijk x_k)_ij
  Matrix m4;  ///< (12 sum_kl K_ijkl x_k x_l)_ij
};

PortfolioMoments portfolio_moments(const MomentTensors& tensors, const Vector& x);
PortfolioMomentGradients portfolio_moment_gradients(const MomentTensors& tensors, const Vector& x);
PortfolioMomentHessians portfolio_moment_hessians(const MomentTensors& tensors, const Vector& x);

}  // namespace mvsk
