//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <vector>

#include "gcp/kernel.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

/// Split of a fully observed tensor into training and test entries.
struct Holdout {
  Shape shape;
  /// Linear indices, ascending; disjoint from `test`.
  std::vector<std::size_t> train;
  /// Linear indices in draw order.
  std::vector<std::size_t> test;
  /// Data values at `test`.
  std::vector<double> test_values;

  /// Weights observing exactly the training entries.
  WeightTensor train_weights() const;
};

/// Holds out `n_ones` entries equal to 1 and `n_zeros` equal to 0, drawn
/// uniformly without replacement. DomainError for non-binary data,
/// CountError when either class is too small.
Holdout make_holdout(const DenseTensor &x, std::size_t n_ones,
                     std::size_t n_zeros, std::uint64_t seed);

/// Holds out round(fraction * |I|) entries uniformly at random.
Holdout make_holdout_random(const DenseTensor &x, double fraction,
                            std::uint64_t seed);

/// sum_{x=1} log p_i + sum_{x=0} log(1 - p_i) over the test entries, with
/// p_i = probability_of_one(loss, m_i). DomainError for losses without a
/// probability reading or non-binary test values.
double heldout_loglik(const KruskalTensor &m, const Holdout &h,
                      const LossSpec &loss);

}  // namespace gcp
