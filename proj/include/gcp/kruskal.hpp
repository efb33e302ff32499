//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "gcp/tensor.hpp"

namespace gcp {

/// Low-rank CP model: d factor matrices A_k (n_k x r) and an optional weight
/// vector lambda. Entry i is sum_j lambda(j) prod_k A_k(i_k, j), with
/// lambda = 1 when absent.
///
/// Weights must be finite and nonnegative. A zero weight only arises from
/// normalize() on a component with a vanishing column.
class KruskalTensor {
public:
  explicit KruskalTensor(std::vector<Matrix> factors);
  KruskalTensor(std::vector<Matrix> factors, Vector weights);

  std::size_t order() const noexcept { return factors_.size(); }
  std::size_t rank() const noexcept {
    return static_cast<std::size_t>(factors_.front().cols());
  }
  Shape shape() const;

  const Matrix &factor(std::size_t k) const { return factors_.at(k); }
  const std::vector<Matrix> &factors() const noexcept { return factors_; }

  bool has_weights() const noexcept { return weights_.has_value(); }
  /// Weight vector; all ones when the model carries none.
  Vector weights() const;

  /// Same factors, weights dropped.
  KruskalTensor without_weights() const { return KruskalTensor(factors_); }

  /// Weights multiplied into the first factor; the result has none.
  KruskalTensor absorb_weights() const;

private:
  std::vector<Matrix> factors_;
  std::optional<Vector> weights_;
};

double entry(const KruskalTensor &m, MultiIndexView idx);

/// Dense reconstruction. Throws CapacityError above `budget` elements.
DenseTensor full(const KruskalTensor &m,
                 std::size_t budget = kDenseElementBudget);

/// Z_k: Khatri-Rao product of all factors except k, in the order
/// A_{d-1}, ..., A_{k+1}, A_{k-1}, ..., A_0. For a 1-way model this is a
/// 1 x r row of ones.
Matrix khatri_rao_except(const KruskalTensor &m, std::size_t k);

/// Mode-k unfolding of the model, A_k diag(lambda) Z_k^T.
Matrix model_unfold(const KruskalTensor &m, std::size_t k);

/// Rescales every factor column to unit 2-norm, moving the magnitudes into
/// the weights, and orders components by descending weight (ties broken by
/// the lexicographic order of the first factor's columns). A component with a
/// zero column gets weight 0 and keeps that column as zeros; its position is
/// appended to `zero_components` when given.
KruskalTensor normalize(const KruskalTensor &m,
                        std::vector<std::size_t> *zero_components = nullptr);

/// Number of optimization variables, r * sum_k n_k (+ r with weights).
std::size_t parameter_count(const Shape &shape, std::size_t rank,
                            bool with_weights);

/// Stacks vec(A_0); ...; vec(A_{d-1}) (each column-major), followed by lambda
/// when the model has weights.
std::vector<double> kt2vec(const KruskalTensor &m);

/// Inverse of kt2vec.
KruskalTensor vec2kt(std::span<const double> v, const Shape &shape,
                     std::size_t rank, bool has_weights);

}  // namespace gcp
