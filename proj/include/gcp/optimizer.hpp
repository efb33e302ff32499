//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "gcp/kernel.hpp"
#include "gcp/kruskal.hpp"
#include "gcp/loss.hpp"

namespace gcp {

/// Per-variable lower bounds; -infinity for a free variable. Upper bounds are
/// not supported.
struct Bounds {
  std::vector<double> lower;

  static Bounds unbounded(std::size_t n);
  static Bounds uniform(std::size_t n, double lower);

  /// Clamps x onto the feasible set in place.
  void project(std::span<double> x) const;
  bool feasible(std::span<const double> x) const;
};

struct OptOptions {
  /// Number of stored curvature pairs.
  std::size_t memory = 5;
  std::size_t max_iters = 1000;
  /// Stop when ||P(x - g) - x||_inf falls to this value.
  double grad_tol = 1e-5;
  /// Stop when |F_prev - F| <= rel_f_tol * max(|F_prev|, |F|). A change at
  /// rounding level does not stop the run while the projected gradient is
  /// still shrinking.
  double rel_f_tol = 1e-9;
  double sufficient_decrease = 1e-4;
  double curvature = 0.9;
  std::size_t max_line_search = 20;
  std::uint64_t seed = 0;

  /// Throws DomainError on out-of-range settings.
  void validate() const;
};

enum class OptStatus {
  converged_grad,
  converged_f,
  max_iters,
  line_search_failure,
};

std::string_view status_name(OptStatus s) noexcept;

struct IterationRecord {
  std::size_t iteration = 0;
  double value = 0.0;
  double projected_grad_norm = 0.0;
  double step = 0.0;
};

/// One record per accepted iterate; record 0 is the starting point.
struct OptTrace {
  std::vector<IterationRecord> records;
  OptStatus status = OptStatus::max_iters;
  std::size_t evaluations = 0;
};

/// Writes F(x) to the return value and the gradient into `grad`.
using Oracle =
    std::function<double(std::span<const double> x, std::span<double> grad)>;

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  OptTrace trace;
};

/// ||P(x - g) - x||_inf for lower bounds.
double projected_gradient_norm(std::span<const double> x,
                               std::span<const double> g,
                               const Bounds &bounds);

/// Bound-constrained limited-memory quasi-Newton minimization.
///
/// Each iteration freezes the variables sitting on their bound with a
/// gradient pushing outward, builds a direction from the two-loop recursion
/// on the remaining (free) variables, and searches along the projected path
/// P(x + alpha d). A step is accepted once it gives sufficient decrease and
/// no increase in F; the weak curvature condition is also demanded when the
/// step did not touch a bound. Curvature pairs with
/// s'y <= 1e-10 ||s|| ||y|| are discarded. When the quasi-Newton direction
/// fails to produce a step, the search is retried along the steepest descent
/// direction with the memory cleared.
///
/// Throws NumericalError if F or the gradient is non-finite at the start
/// point. Non-finite trial values inside the line search shrink the step.
MinimizeResult minimize(const Oracle &oracle, std::vector<double> x0,
                        const Bounds &bounds, const OptOptions &opts);

struct FitResult {
  /// Normalized, components sorted by descending weight.
  KruskalTensor model;
  double value = 0.0;
  OptTrace trace;
  std::uint64_t seed = 0;
};

/// Objective F(v) and gradient for the stacked factor vector v = kt2vec(A),
/// i.e. vec2kt -> gcp_fg -> kt2vec. The Gaussian fast path is used whenever
/// the problem qualifies.
Oracle gcp_oracle(const FitProblem &p);

/// Per-variable bounds of kt2vec(A) from the problem's per-mode bounds.
Bounds factor_bounds(const FitProblem &p);

/// Fits from `init`. Any weights on `init` are folded into its first factor.
FitResult fit_gcp(const FitProblem &p, const KruskalTensor &init,
                  const OptOptions &opts);
/// Fits from default_init(..., opts.seed).
FitResult fit_gcp(const FitProblem &p, const OptOptions &opts);

struct MultiStartResult {
  std::vector<FitResult> runs;
  /// Position of the run with the lowest objective value.
  std::size_t best = 0;
};

/// One fit per seed; keeps every run and marks the lowest-objective one.
MultiStartResult fit_gcp_multistart(const FitProblem &p,
                                    std::span<const std::uint64_t> seeds,
                                    OptOptions opts);

/// Random starting model: uniform [0, 1) entries when `nonnegative`,
/// 0.1 * standard normal otherwise. Deterministic in the seed.
KruskalTensor default_init(const Shape &shape, std::size_t rank,
                           bool nonnegative, std::uint64_t seed);
/// Nonnegative exactly when the loss is bounded below by 0.
KruskalTensor default_init(const Shape &shape, std::size_t rank,
                           const LossSpec &loss, std::uint64_t seed);

}  // namespace gcp
