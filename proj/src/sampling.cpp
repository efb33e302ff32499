//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gcp/error.hpp"
#include "gcp/random.hpp"

namespace gcp {

namespace {
  void require(bool ok, LossKind dist, const std::string &what) {
    if (!ok)
      throw DomainError(std::string(loss_kind_name(dist)) + " sampling: "
                        + what);
  }

  double logistic(double m) {
    return m >= 0.0 ? 1.0 / (1.0 + std::exp(-m))
                    : std::exp(m) / (1.0 + std::exp(m));
  }
}  // namespace

DenseTensor sample_from_model(const KruskalTensor &m, LossKind dist,
                              std::uint64_t seed,
                              const SampleParams &params) {
  require(dist != LossKind::huber && dist != LossKind::beta_div, dist,
          "no generating distribution");
  require(params.sigma >= 0.0 && std::isfinite(params.sigma), dist,
          "sigma must be finite and nonnegative");
  require(params.gamma_shape > 0.0, dist, "gamma shape must be positive");
  require(params.failures > 0.0, dist, "failures must be positive");

  DenseTensor x = full(m);
  for (double v : x.values())
    require(std::isfinite(v), dist, "model value is not finite");

  Rng rng(seed);
  for (double &v : x.values()) {
    const double mi = v;
    switch (dist) {
    case LossKind::gaussian:
      v = params.sigma > 0.0 ? mi + params.sigma * rng.normal() : mi;
      break;
    case LossKind::bernoulli_odds:
      require(mi >= 0.0, dist, "odds must be nonnegative");
      v = rng.bernoulli(mi / (1.0 + mi)) ? 1.0 : 0.0;
      break;
    case LossKind::bernoulli_logit:
      v = rng.bernoulli(logistic(mi)) ? 1.0 : 0.0;
      break;
    case LossKind::poisson:
      require(mi >= 0.0, dist, "rate must be nonnegative");
      v = static_cast<double>(rng.poisson(mi));
      break;
    case LossKind::poisson_log:
      require(std::isfinite(std::exp(mi)), dist, "rate overflows");
      v = static_cast<double>(rng.poisson(std::exp(mi)));
      break;
    case LossKind::gamma:
      require(mi > 0.0, dist, "mean must be positive");
      v = rng.gamma(params.gamma_shape, mi / params.gamma_shape);
      break;
    case LossKind::rayleigh: {
      require(mi >= 0.0, dist, "mean must be nonnegative");
      const double sigma = mi * std::sqrt(2.0 / std::numbers::pi);
      double u = rng.uniform();
      while (u <= 0.0)
        u = rng.uniform();
      v = sigma * std::sqrt(-2.0 * std::log(u));
      break;
    }
    case LossKind::negbinom:
      require(mi >= 0.0, dist, "odds must be nonnegative");
      v = mi > 0.0 ? static_cast<double>(
              rng.poisson(rng.gamma(params.failures, mi)))
                   : 0.0;
      break;
    case LossKind::huber:
    case LossKind::beta_div:
      break;
    }
  }
  return x;
}

double sample_mean(LossKind dist, double m, const SampleParams &params) {
  require(dist != LossKind::huber && dist != LossKind::beta_div, dist,
          "no generating distribution");
  switch (dist) {
  case LossKind::bernoulli_odds:
    return m / (1.0 + m);
  case LossKind::bernoulli_logit:
    return logistic(m);
  case LossKind::poisson_log:
    return std::exp(m);
  case LossKind::negbinom:
    return params.failures * m;
  default:
    return m;
  }
}

KruskalTensor random_model(const Shape &shape, std::size_t rank,
                           std::uint64_t seed, double lo, double hi) {
  if (rank < 1)
    throw ShapeError("rank must be at least 1");
  if (!(lo <= hi))
    throw DomainError("random_model needs lo <= hi");
  Rng rng(seed);
  std::vector<Matrix> factors;
  for (std::size_t n : shape.dims()) {
    Matrix a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        a(i, j) = rng.uniform(lo, hi);
    factors.push_back(std::move(a));
  }
  return KruskalTensor(std::move(factors));
}

}  // namespace gcp
