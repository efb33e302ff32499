//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/holdout.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcp/error.hpp"
#include "gcp/random.hpp"

namespace gcp {

namespace {
  // First k entries of a partial Fisher-Yates shuffle of `pool`.
  std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t k,
                                Rng &rng) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
  }

  Holdout finish(const DenseTensor &x, std::vector<std::size_t> test) {
    Holdout h{x.shape(), {}, std::move(test), {}};
    std::vector<bool> held(x.size(), false);
    for (std::size_t i : h.test) {
      held[i] = true;
      h.test_values.push_back(x[i]);
    }
    h.train.reserve(x.size() - h.test.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!held[i])
        h.train.push_back(i);
    return h;
  }
}  // namespace

WeightTensor Holdout::train_weights() const {
  return WeightTensor::mask(shape, train);
}

Holdout make_holdout(const DenseTensor &x, std::size_t n_ones,
                     std::size_t n_zeros, std::uint64_t seed) {
  std::vector<std::size_t> ones;
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 1.0)
      ones.push_back(i);
    else if (x[i] == 0.0)
      zeros.push_back(i);
    else
      throw DomainError("stratified holdout needs binary data");
  }
  if (ones.size() < n_ones)
    throw CountError("asked for " + std::to_string(n_ones) + " ones, tensor has "
                     + std::to_string(ones.size()));
  if (zeros.size() < n_zeros)
    throw CountError("asked for " + std::to_string(n_zeros)
                     + " zeros, tensor has " + std::to_string(zeros.size()));
  Rng rng(seed);
  std::vector<std::size_t> test = draw(std::move(ones), n_ones, rng);
  const std::vector<std::size_t> z = draw(std::move(zeros), n_zeros, rng);
  test.insert(test.end(), z.begin(), z.end());
  return finish(x, std::move(test));
}

Holdout make_holdout_random(const DenseTensor &x, double fraction,
                            std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw DomainError("holdout fraction must lie in [0, 1]");
  const auto k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(x.size())));
  std::vector<std::size_t> all(x.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = i;
  Rng rng(seed);
  return finish(x, draw(std::move(all), k, rng));
}

double heldout_loglik(const KruskalTensor &m, const Holdout &h,
                      const LossSpec &loss) {
  if (m.shape() != h.shape)
    throw ShapeError("model and holdout shapes differ");
  const std::vector<double> mv = model_entries_at_linear(m, h.test);
  double ll = 0.0;
  for (std::size_t i = 0; i < mv.size(); ++i) {
    const double p = probability_of_one(loss, mv[i]);
    if (h.test_values[i] == 1.0)
      ll += std::log(p);
    else if (h.test_values[i] == 0.0)
      ll += std::log1p(-p);
    else
      throw DomainError("held-out log-likelihood needs binary test values");
  }
  return ll;
}

}  // namespace gcp
