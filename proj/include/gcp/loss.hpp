//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Elementwise loss functions f(x, m) for data value x and model value m.
//
// Each statistically motivated loss is the negative log-likelihood of x under
// a distribution whose parameter is linked to m, with terms that depend only
// on x or on fixed distribution parameters dropped:
//
//   gaussian         (x - m)^2                                 m real
//   bernoulli_odds   log(1 + m) - x log(m + eps)               m >= 0
//   bernoulli_logit  log(1 + e^m) - x m                        m real
//   poisson          m - x log(m + eps)                        m >= 0
//   poisson_log      e^m - x m                                 m real
//   gamma            x / (m + eps) + log(m + eps)              m >= 0
//   rayleigh         2 log(m + eps) + (pi/4) (x / (m + eps))^2 m >= 0
//   negbinom         (r + x) log(1 + m) - x log(m + eps)       m >= 0
//   huber            (x - m)^2 if |x - m| <= delta,
//                    2 delta |x - m| - delta^2 otherwise       m real
//   beta_div         m^b / b - x m^(b-1) / (b - 1)             m >= 0
//                    (b = 1: poisson, b = 0: gamma)
//
// The eps shift turns the positivity constraint m > 0 into m >= 0. In
// beta_div each power term uses m + eps whenever its derivative has a
// negative exponent (first term for b < 1, second for b < 2), and the b = 1
// and b = 0 branches are literally the poisson and gamma rows.
//
// Distribution parameters that the derivations absorb (sigma, gamma shape k,
// ...) have no runtime representation here; the sampler takes them instead.

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gcp {

enum class LossKind {
  gaussian,
  bernoulli_odds,
  bernoulli_logit,
  poisson,
  poisson_log,
  gamma,
  rayleigh,
  negbinom,
  huber,
  beta_div,
};

struct LossParams {
  double epsilon = 1e-10;
  /// Huber threshold.
  double delta = 0.25;
  /// beta-divergence exponent.
  double beta = 0.5;
  /// Negative binomial number of failures r.
  double failures = 1.0;
};

class LossSpec {
public:
  /// Throws DomainError on invalid parameters.
  explicit LossSpec(LossKind kind, LossParams params = {});

  LossKind kind() const noexcept { return kind_; }
  const LossParams &params() const noexcept { return params_; }
  std::string_view name() const noexcept;

  /// 0 for losses that need m >= 0, -infinity otherwise.
  double lower_bound() const noexcept { return lower_; }
  bool bounded() const noexcept { return lower_ == 0.0; }

  /// f(x, m) without domain or feasibility checks.
  double value(double x, double m) const noexcept;
  /// df/dm (x, m) without domain or feasibility checks.
  double deriv(double x, double m) const noexcept;

  /// Whether x belongs to the loss's data domain.
  bool in_domain(double x) const noexcept;

  /// Human-readable data domain, for error messages.
  std::string_view domain_description() const noexcept;

private:
  LossKind kind_;
  LossParams params_;
  double lower_;
};

/// Checked evaluation: DomainError for x outside the data domain,
/// FeasibilityError for m below the lower bound.
double loss_value(const LossSpec &spec, double x, double m);
double loss_deriv(const LossSpec &spec, double x, double m);

/// max(m, lower_bound).
double project_feasible(const LossSpec &spec, double m) noexcept;

/// Probability of a one implied by model value m, for the binary prediction
/// protocol, truncated to [1e-16, 1 - 1e-16]:
///   gaussian p = m, bernoulli_odds p = m / (1 + m),
///   bernoulli_logit p = e^m / (1 + e^m).
/// DomainError for any other loss.
double probability_of_one(const LossSpec &spec, double m);

inline constexpr double kProbabilityFloor = 1e-16;

std::optional<LossKind> parse_loss_kind(std::string_view name) noexcept;
std::string_view loss_kind_name(LossKind kind) noexcept;
const std::vector<LossKind> &all_loss_kinds();

}  // namespace gcp
