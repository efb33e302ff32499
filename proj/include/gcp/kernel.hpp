//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Objective and gradient of generalized CP fitting.
//
// For data X, entry weights W and a model M = [[A_0, ..., A_{d-1}]],
//
//   F = sum_i w_i f(x_i, m_i) + sum_k (eta_k / 2) ||A_k||_F^2
//
// and the gradient with respect to A_k is the MTTKRP
//
//   dF/dA_k = Y_(k) Z_k + eta_k A_k,    y_i = w_i df/dm(x_i, m_i),
//
// where Z_k is the Khatri-Rao product of the other factors. Y vanishes
// wherever w_i = 0, so scarce data (only observed entries stored) gives a
// sparse Y while sparse data (unstored entries are observed zeros) gives a
// dense one.

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

/// Nonnegative entry weights. `uniform` observes every entry with weight
/// 1/|I|; `mask` observes a listed set with weight 1/|Omega|; `general` lists
/// arbitrary weights w_i >= 0. Unlisted entries always have weight 0.
class WeightTensor {
public:
  enum class Kind { uniform, mask, general };

  static WeightTensor uniform(const Shape &shape);
  /// `observed` are distinct linear indices.
  static WeightTensor mask(const Shape &shape,
                           std::vector<std::size_t> observed);
  static WeightTensor mask(const CooTensor &pattern);
  static WeightTensor general(const Shape &shape,
                              std::vector<std::size_t> indices,
                              std::vector<double> weights);

  Kind kind() const noexcept { return kind_; }
  const Shape &shape() const noexcept { return shape_; }

  /// Number of entries with a listed weight (|I| for uniform).
  std::size_t count() const noexcept;

  /// Listed linear indices, ascending. Empty for uniform.
  std::span<const std::size_t> indices() const noexcept { return index_; }
  /// Weights matching indices(). Empty for uniform.
  std::span<const double> weights() const noexcept { return weight_; }

  /// Weight of every entry for the uniform kind.
  double uniform_weight() const noexcept {
    return 1.0 / static_cast<double>(shape_.total());
  }

  double sum() const noexcept;

private:
  WeightTensor(Kind kind, Shape shape) : kind_(kind), shape_(std::move(shape)) {}

  Kind kind_;
  Shape shape_;
  std::vector<std::size_t> index_;
  std::vector<double> weight_;
};

struct DerivativeResult;

enum class DataLayout {
  /// Every entry stored.
  dense,
  /// Coordinate list; unlisted entries are observed zeros.
  sparse,
  /// Coordinate list; unlisted entries are missing.
  scarce,
};

/// Data, weights, loss, rank, regularization and factor bounds of one fit.
/// Data values with positive weight are checked against the loss's domain at
/// construction.
class FitProblem {
public:
  /// Dense data, all entries observed unless `weights` says otherwise.
  static FitProblem dense(DenseTensor data, LossSpec loss, std::size_t rank,
                          std::optional<WeightTensor> weights = std::nullopt);
  /// Sparse data: unlisted entries are observed zeros, uniform weights.
  static FitProblem sparse(CooTensor data, LossSpec loss, std::size_t rank);
  /// Scarce data: only listed entries are observed, with weight 1/|Omega|
  /// or the given per-entry weights.
  static FitProblem scarce(CooTensor data, LossSpec loss, std::size_t rank,
                           std::optional<std::vector<double>> weights =
                               std::nullopt);

  /// One value per mode, or a single value used for every mode.
  FitProblem &set_regularization(std::vector<double> eta);
  /// Per-mode lower bound on factor entries: 0 or -infinity. Bounded losses
  /// require 0 in every mode.
  FitProblem &set_lower_bounds(std::vector<double> bounds);
  /// Element budget for dense intermediates (model, Y).
  FitProblem &set_dense_budget(std::size_t budget);

  const Shape &shape() const noexcept { return shape_; }
  DataLayout layout() const noexcept { return layout_; }
  const LossSpec &loss() const noexcept { return loss_; }
  std::size_t rank() const noexcept { return rank_; }
  const std::vector<double> &regularization() const noexcept { return eta_; }
  const std::vector<double> &lower_bounds() const noexcept { return lower_; }
  std::size_t dense_budget() const noexcept { return budget_; }

  /// Entry weights. For scarce data they are aligned with the data entries.
  const WeightTensor &weights() const noexcept { return weights_; }

  /// Number of observed entries |Omega|.
  std::size_t observed_count() const noexcept;

  const DenseTensor &dense_data() const;
  const CooTensor &coo_data() const;

  /// Throws FeasibilityError when a factor entry violates its mode's bound,
  /// ShapeError on a shape or rank mismatch.
  void check_model(const KruskalTensor &m) const;

private:
  FitProblem(std::variant<DenseTensor, CooTensor> data, DataLayout layout,
             WeightTensor weights, LossSpec loss, std::size_t rank);

  void validate_data() const;

  std::variant<DenseTensor, CooTensor> data_;
  DataLayout layout_;
  Shape shape_;
  WeightTensor weights_;
  LossSpec loss_;
  std::size_t rank_;
  std::vector<double> eta_;
  std::vector<double> lower_;
  std::size_t budget_ = kDenseElementBudget;
  // Sparse layout: storage position of each entry, sorted by linear index.
  std::vector<std::size_t> sorted_linear_;
  std::vector<std::size_t> sorted_entry_;
  // Scarce layout: weight of each entry in storage order.
  std::vector<double> entry_weight_;

  friend DerivativeResult elementwise_derivative(const FitProblem &,
                                                 const KruskalTensor &);
};

/// Y_(k) Z_k with Z_k built from the model's factors (weights are not
/// applied). The coordinate overload touches only stored entries.
Matrix mttkrp(const DenseTensor &y, const KruskalTensor &m, std::size_t k);
Matrix mttkrp(const CooTensor &y, const KruskalTensor &m, std::size_t k);

/// Model values at the given flat subscripts (consecutive d-tuples).
std::vector<double> model_entries_at(const KruskalTensor &m,
                                     std::span<const std::size_t> subscripts);
/// Model values at the given linear indices.
std::vector<double>
model_entries_at_linear(const KruskalTensor &m,
                        std::span<const std::size_t> linear);

/// Elementwise derivative tensor, dense unless the data is scarce.
using DerivativeTensor = std::variant<DenseTensor, CooTensor>;

struct Gradient {
  double value = 0.0;
  std::vector<Matrix> factor_grads;
};

struct WeightedGradient {
  double value = 0.0;
  std::vector<Matrix> factor_grads;
  Vector weight_grad;
};

/// Y for the current model, together with the loss part of F.
struct DerivativeResult {
  double loss = 0.0;
  DerivativeTensor y;
};
DerivativeResult elementwise_derivative(const FitProblem &p,
                                        const KruskalTensor &m);

/// F and dF/dA_k. Model weights, if present, are treated as constants.
Gradient gcp_fg(const FitProblem &p, const KruskalTensor &m);

/// F, dF/dA_k = Y_(k) Z_k diag(lambda) + eta_k A_k and dF/dlambda = Z^T vec(Y)
/// for a model with explicit weights. ContractError when m has none.
WeightedGradient gcp_fg_weighted_lambda(const FitProblem &p,
                                        const KruskalTensor &m);

/// Gaussian loss with every entry observed, computed without forming Y:
///
///   dF/dA_k = (2/|I|) (-X_(k) Z_k + A_k Gamma_k) + eta_k A_k
///
/// with Gamma_k the Hadamard product of the other factors' Gram matrices
/// (each side scaled by the model weights). Sparse data uses the coordinate
/// MTTKRP. ContractError for other losses or missing data.
Gradient gaussian_fast_fg(const FitProblem &p, const KruskalTensor &m);

}  // namespace gcp
