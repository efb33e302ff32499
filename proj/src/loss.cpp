//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/loss.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

#include "gcp/error.hpp"

namespace gcp {

namespace {
  constexpr double kInf = std::numeric_limits<double>::infinity();

  constexpr std::array<std::pair<LossKind, std::string_view>, 10> kNames{{
      {LossKind::gaussian, "gaussian"},
      {LossKind::bernoulli_odds, "bernoulli_odds"},
      {LossKind::bernoulli_logit, "bernoulli_logit"},
      {LossKind::poisson, "poisson"},
      {LossKind::poisson_log, "poisson_log"},
      {LossKind::gamma, "gamma"},
      {LossKind::rayleigh, "rayleigh"},
      {LossKind::negbinom, "negbinom"},
      {LossKind::huber, "huber"},
      {LossKind::beta_div, "beta_div"},
  }};

  bool is_natural(double x) noexcept {
    return x >= 0.0 && std::isfinite(x) && x == std::floor(x);
  }

  // log(1 + e^m) without overflow.
  double softplus(double m) noexcept {
    return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }

  double logistic(double m) noexcept {
    if (m >= 0.0)
      return 1.0 / (1.0 + std::exp(-m));
    const double e = std::exp(m);
    return e / (1.0 + e);
  }
}  // namespace

LossSpec::LossSpec(LossKind kind, LossParams params)
    : kind_(kind), params_(params), lower_(-kInf) {
  if (!(params_.epsilon > 0.0) || !std::isfinite(params_.epsilon))
    throw DomainError("epsilon must be positive");
  switch (kind_) {
  case LossKind::huber:
    if (!(params_.delta > 0.0) || !std::isfinite(params_.delta))
      throw DomainError("huber delta must be positive");
    break;
  case LossKind::negbinom:
    if (!(params_.failures > 0.0) || !std::isfinite(params_.failures))
      throw DomainError("negbinom failures must be positive");
    break;
  case LossKind::beta_div:
    if (!std::isfinite(params_.beta))
      throw DomainError("beta must be finite");
    break;
  default:
    break;
  }

  switch (kind_) {
  case LossKind::bernoulli_odds:
  case LossKind::poisson:
  case LossKind::gamma:
  case LossKind::rayleigh:
  case LossKind::negbinom:
  case LossKind::beta_div:
    lower_ = 0.0;
    break;
  default:
    break;
  }
}

std::string_view LossSpec::name() const noexcept {
  return loss_kind_name(kind_);
}

double LossSpec::value(double x, double m) const noexcept {
  const double eps = params_.epsilon;
  switch (kind_) {
  case LossKind::gaussian:
    return (x - m) * (x - m);
  case LossKind::bernoulli_odds:
    return std::log1p(m) - x * std::log(m + eps);
  case LossKind::bernoulli_logit:
    return softplus(m) - x * m;
  case LossKind::poisson:
    return m - x * std::log(m + eps);
  case LossKind::poisson_log:
    return std::exp(m) - x * m;
  case LossKind::gamma:
    return x / (m + eps) + std::log(m + eps);
  case LossKind::rayleigh: {
    const double ratio = x / (m + eps);
    return 2.0 * std::log(m + eps) + std::numbers::pi / 4.0 * ratio * ratio;
  }
  case LossKind::negbinom:
    return (params_.failures + x) * std::log1p(m) - x * std::log(m + eps);
  case LossKind::huber: {
    const double r = std::abs(x - m);
    const double delta = params_.delta;
    return r <= delta ? r * r : 2.0 * delta * r - delta * delta;
  }
  case LossKind::beta_div: {
    const double b = params_.beta;
    if (b == 1.0)
      return m - x * std::log(m + eps);
    if (b == 0.0)
      return x / (m + eps) + std::log(m + eps);
    const double base1 = b < 1.0 ? m + eps : m;
    const double base2 = b < 2.0 ? m + eps : m;
    return std::pow(base1, b) / b - x * std::pow(base2, b - 1.0) / (b - 1.0);
  }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double LossSpec::deriv(double x, double m) const noexcept {
  const double eps = params_.epsilon;
  switch (kind_) {
  case LossKind::gaussian:
    return -2.0 * (x - m);
  case LossKind::bernoulli_odds:
    return 1.0 / (1.0 + m) - x / (m + eps);
  case LossKind::bernoulli_logit:
    return logistic(m) - x;
  case LossKind::poisson:
    return 1.0 - x / (m + eps);
  case LossKind::poisson_log:
    return std::exp(m) - x;
  case LossKind::gamma: {
    const double s = m + eps;
    return 1.0 / s - x / (s * s);
  }
  case LossKind::rayleigh: {
    const double s = m + eps;
    return 2.0 / s - std::numbers::pi / 2.0 * x * x / (s * s * s);
  }
  case LossKind::negbinom:
    return (params_.failures + x) / (1.0 + m) - x / (m + eps);
  case LossKind::huber: {
    const double r = x - m;
    const double delta = params_.delta;
    if (std::abs(r) <= delta)
      return -2.0 * r;
    return r > 0.0 ? -2.0 * delta : 2.0 * delta;
  }
  case LossKind::beta_div: {
    const double b = params_.beta;
    if (b == 1.0)
      return 1.0 - x / (m + eps);
    if (b == 0.0) {
      const double s = m + eps;
      return 1.0 / s - x / (s * s);
    }
    const double base1 = b < 1.0 ? m + eps : m;
    const double base2 = b < 2.0 ? m + eps : m;
    return std::pow(base1, b - 1.0) - x * std::pow(base2, b - 2.0);
  }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

bool LossSpec::in_domain(double x) const noexcept {
  switch (kind_) {
  case LossKind::gaussian:
  case LossKind::huber:
    return std::isfinite(x);
  case LossKind::bernoulli_odds:
  case LossKind::bernoulli_logit:
    return x == 0.0 || x == 1.0;
  case LossKind::poisson:
  case LossKind::poisson_log:
  case LossKind::negbinom:
    return is_natural(x);
  case LossKind::gamma:
    return x > 0.0 && std::isfinite(x);
  case LossKind::rayleigh:
  case LossKind::beta_div:
    return x >= 0.0 && std::isfinite(x);
  }
  return false;
}

std::string_view LossSpec::domain_description() const noexcept {
  switch (kind_) {
  case LossKind::gaussian:
  case LossKind::huber:
    return "finite real numbers";
  case LossKind::bernoulli_odds:
  case LossKind::bernoulli_logit:
    return "{0, 1}";
  case LossKind::poisson:
  case LossKind::poisson_log:
  case LossKind::negbinom:
    return "natural numbers {0, 1, 2, ...}";
  case LossKind::gamma:
    return "positive real numbers";
  case LossKind::rayleigh:
  case LossKind::beta_div:
    return "nonnegative real numbers";
  }
  return "";
}

namespace {
  void check_point(const LossSpec &spec, double x, double m) {
    if (!spec.in_domain(x))
      throw DomainError("data value " + std::to_string(x) + " outside the "
                        + std::string(spec.name()) + " domain of "
                        + std::string(spec.domain_description()));
    if (!(m >= spec.lower_bound()))
      throw FeasibilityError("model value " + std::to_string(m)
                             + " below the lower bound of "
                             + std::string(spec.name()));
  }
}  // namespace

double loss_value(const LossSpec &spec, double x, double m) {
  check_point(spec, x, m);
  return spec.value(x, m);
}

double loss_deriv(const LossSpec &spec, double x, double m) {
  check_point(spec, x, m);
  return spec.deriv(x, m);
}

double project_feasible(const LossSpec &spec, double m) noexcept {
  return std::max(m, spec.lower_bound());
}

double probability_of_one(const LossSpec &spec, double m) {
  double p = 0.0;
  switch (spec.kind()) {
  case LossKind::gaussian:
    p = m;
    break;
  case LossKind::bernoulli_odds:
    p = m / (1.0 + m);
    break;
  case LossKind::bernoulli_logit:
    p = logistic(m);
    break;
  default:
    throw DomainError("no probability of one for loss "
                      + std::string(spec.name()));
  }
  if (std::isnan(p))
    throw NumericalError("probability is NaN for model value "
                         + std::to_string(m));
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

std::optional<LossKind> parse_loss_kind(std::string_view name) noexcept {
  for (const auto &[kind, n] : kNames)
    if (n == name)
      return kind;
  return std::nullopt;
}

std::string_view loss_kind_name(LossKind kind) noexcept {
  for (const auto &[k, n] : kNames)
    if (k == kind)
      return n;
  return "unknown";
}

const std::vector<LossKind> &all_loss_kinds() {
  static const std::vector<LossKind> kinds = [] {
    std::vector<LossKind> v;
    for (const auto &entry : kNames)
      v.push_back(entry.first);
    return v;
  }();
  return kinds;
}

}  // namespace gcp
