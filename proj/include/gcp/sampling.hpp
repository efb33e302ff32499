//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Synthetic data drawn entrywise from the distribution behind each loss, with
// the model value m_i mapped back through the loss's link:
//
//   gaussian         x ~ N(m, sigma^2)
//   bernoulli_odds   x ~ Bernoulli(m / (1 + m))
//   bernoulli_logit  x ~ Bernoulli(e^m / (1 + e^m))
//   poisson          x ~ Poisson(m)
//   poisson_log      x ~ Poisson(e^m)
//   gamma            x ~ Gamma(shape k, scale m / k)          mean m
//   rayleigh         x ~ Rayleigh(sigma = m sqrt(2 / pi))    mean m
//   negbinom         x ~ Poisson(Gamma(r, scale m))          odds m, r failures
//
// huber and beta_div have no generating distribution and are rejected.

#include <cstdint>

#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

struct SampleParams {
  /// Gaussian noise standard deviation; 0 reproduces full(m).
  double sigma = 0.0;
  /// Gamma shape k.
  double gamma_shape = 1.0;
  /// Negative binomial failures r.
  double failures = 1.0;
};

/// Deterministic in `seed`; entries are drawn in linear-index order from one
/// Rng stream. Throws DomainError for model values outside the distribution's
/// parameter range or invalid parameters.
DenseTensor sample_from_model(const KruskalTensor &m, LossKind dist,
                              std::uint64_t seed, const SampleParams &params = {});

/// Ground-truth model with i.i.d. uniform [lo, hi) factor entries.
/// Mean of one draw of sample_from_model at model value m.
double sample_mean(LossKind dist, double m, const SampleParams &params = {});

KruskalTensor random_model(const Shape &shape, std::size_t rank,
                           std::uint64_t seed, double lo = 0.0,
                           double hi = 1.0);

}  // namespace gcp
