//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Dense and coordinate tensor storage plus the index arithmetic shared by
// every kernel.
//
// Indexing convention. Multiindices, modes and linear indices are 0-based
// everywhere in the API. The textbook 1-based formulas translate as
//
//   linear index   i' = sum_k i_k * n'_k,   n'_0 = 1, n'_k = n_0 * ... * n_{k-1}
//   mode-k column  c  = sum_{l<k} i_l * n'_l + sum_{l>k} i_l * n'_l / n_k
//
// i.e. the first mode varies fastest. Dense storage uses exactly this order,
// so vec(X) is the flat value array.
//
// Matrix is Eigen's default column-major MatrixXd. Nothing in the library
// relies on another layout.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gcp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MultiIndex = std::vector<std::size_t>;
using MultiIndexView = std::span<const std::size_t>;

/// Largest number of elements a dense tensor may hold (2^28 doubles, 2 GiB).
inline constexpr std::size_t kDenseElementBudget = std::size_t{1} << 28;

class Shape {
public:
  explicit Shape(std::vector<std::size_t> dims);
  Shape(std::initializer_list<std::size_t> dims)
      : Shape(std::vector<std::size_t>(dims)) {}

  std::size_t order() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t k) const { return dims_.at(k); }
  const std::vector<std::size_t> &dims() const noexcept { return dims_; }

  /// Number of entries, n^d.
  std::size_t total() const noexcept { return total_; }

  /// n'_k, the linear-index stride of mode k.
  std::size_t stride(std::size_t k) const { return strides_.at(k); }

  /// n, the geometric mean of the mode sizes.
  double geometric_mean() const;
  /// n-bar, the arithmetic mean of the mode sizes.
  double arithmetic_mean() const;

  bool contains(MultiIndexView idx) const noexcept;

  /// Throws ModeError unless k < order().
  void check_mode(std::size_t k) const;

  bool operator==(const Shape &) const = default;

private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

/// Linear position of a multiindex. Throws RangeError when out of range.
std::size_t linear_index(const Shape &shape, MultiIndexView idx);

/// Inverse of linear_index.
MultiIndex multi_index(const Shape &shape, std::size_t linear);

/// (row, column) of a multiindex in the mode-k unfolding.
std::pair<std::size_t, std::size_t>
unfold_index(const Shape &shape, std::size_t k, MultiIndexView idx);

/// Advances idx to the next multiindex in linear order. Returns false after
/// the last one (idx wraps to all zeros).
bool next_index(const Shape &shape, MultiIndex &idx) noexcept;

class DenseTensor {
public:
  /// Zero tensor.
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> values);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t linear) const { return values_[linear]; }
  double &operator[](std::size_t linear) { return values_[linear]; }

  double operator()(MultiIndexView idx) const {
    return values_[linear_index(shape_, idx)];
  }
  double &operator()(MultiIndexView idx) {
    return values_[linear_index(shape_, idx)];
  }

  bool operator==(const DenseTensor &) const = default;

private:
  Shape shape_;
  std::vector<double> values_;
};

/// Coordinate list of (multiindex, value) pairs. Multiindices must be in range
/// and pairwise distinct; duplicates are rejected rather than merged.
class CooTensor {
public:
  explicit CooTensor(Shape shape);

  /// `subscripts` holds nnz consecutive multiindices of length d.
  CooTensor(Shape shape, std::vector<std::size_t> subscripts,
            std::vector<double> values);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  MultiIndexView index(std::size_t e) const noexcept {
    const std::size_t d = shape_.order();
    return {subs_.data() + e * d, d};
  }
  double value(std::size_t e) const noexcept { return values_[e]; }

  std::span<const std::size_t> subscripts() const noexcept { return subs_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Same shape and subscripts as `pattern` with new values. Skips the
  /// range and duplicate checks since the pattern already passed them.
  static CooTensor with_pattern(const CooTensor &pattern,
                                std::vector<double> values);

  /// Linear index of every stored entry, in storage order.
  std::vector<std::size_t> linear_indices() const;

  bool operator==(const CooTensor &) const = default;

private:
  Shape shape_;
  std::vector<std::size_t> subs_;
  std::vector<double> values_;
};

/// Dense tensor with the stored entries scattered in and zeros elsewhere.
DenseTensor to_dense(const CooTensor &t);

/// Mode-k unfolding, n_k x (total / n_k).
Matrix unfold(const DenseTensor &t, std::size_t k);

/// Inverse of unfold for the given target shape.
DenseTensor fold(const Matrix &m, std::size_t k, const Shape &shape);

/// Columnwise Kronecker product. The row index of the first matrix varies
/// slowest, so for two matrices row (i * rows(B) + j) of the result is
/// A(i, :) .* B(j, :).
Matrix khatri_rao(std::span<const Matrix> mats);
Matrix khatri_rao(const Matrix &a, const Matrix &b);

Matrix hadamard(const Matrix &a, const Matrix &b);

}  // namespace gcp
