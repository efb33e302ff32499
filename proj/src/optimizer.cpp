//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "gcp/error.hpp"
#include "gcp/random.hpp"

namespace gcp {

namespace {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Relative F changes this small are indistinguishable from rounding.
  constexpr double kRoundingChange = 8.0 * std::numeric_limits<double>::epsilon();

  double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += a[i] * b[i];
    return s;
  }

  double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

  double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a)
      m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite(std::span<const double> a) {
    return std::all_of(a.begin(), a.end(),
                       [](double v) { return std::isfinite(v); });
  }

  struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho = 0.0;
  };

  // Two-loop recursion applied to the free components of g.
  std::vector<double> quasi_newton_direction(
      std::span<const double> g, const std::vector<bool> &free,
      const std::deque<CurvaturePair> &pairs, double gamma) {
    const std::size_t n = g.size();
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i)
      q[i] = free[i] ? g[i] : 0.0;

    std::vector<double> alpha(pairs.size());
    for (std::size_t p = pairs.size(); p-- > 0;) {
      const CurvaturePair &cp = pairs[p];
      alpha[p] = cp.rho * dot(cp.s, q);
      for (std::size_t i = 0; i < n; ++i)
        if (free[i])
          q[i] -= alpha[p] * cp.y[i];
    }
    for (double &v : q)
      v *= gamma;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const CurvaturePair &cp = pairs[p];
      const double beta = cp.rho * dot(cp.y, q);
      for (std::size_t i = 0; i < n; ++i)
        if (free[i])
          q[i] += (alpha[p] - beta) * cp.s[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      q[i] = free[i] ? -q[i] : 0.0;
    return q;
  }

  struct LineSearchResult {
    bool accepted = false;
    std::vector<double> x;
    std::vector<double> g;
    double f = 0.0;
    double step = 0.0;
  };

  LineSearchResult projected_search(const Oracle &oracle,
                                    std::span<const double> x, double f,
                                    std::span<const double> g,
                                    std::span<const double> dir,
                                    double step0, const Bounds &bounds,
                                    const OptOptions &opts,
                                    std::size_t &evaluations) {
    const std::size_t n = x.size();
    const double gd = dot(g, dir);
    LineSearchResult best;
    std::vector<double> xt(n);
    std::vector<double> gt(n);
    double lo = 0.0;
    double hi = kInf;
    double step = step0;

    for (std::size_t trial = 0; trial < opts.max_line_search; ++trial) {
      bool clipped = false;
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] + step * dir[i];
        if (v < bounds.lower[i]) {
          xt[i] = bounds.lower[i];
          clipped = true;
        } else {
          xt[i] = v;
        }
        moved = moved || xt[i] != x[i];
      }
      if (!moved)
        break;

      const double ft = oracle(xt, gt);
      ++evaluations;
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        decrease += g[i] * (xt[i] - x[i]);
      decrease = std::min(decrease, 0.0);

      if (!std::isfinite(ft) || !all_finite(gt)
          || ft > f + opts.sufficient_decrease * decrease) {
        hi = step;
        // Safeguarded quadratic interpolation on interior steps.
        double next = 0.5 * (lo + hi);
        if (std::isfinite(ft) && !clipped && lo == 0.0) {
          const double denom = 2.0 * (ft - f - gd * step);
          if (denom > 0.0)
            next = std::clamp(-gd * step * step / denom, 0.1 * step,
                              0.5 * step);
        }
        step = next;
        continue;
      }

      best.accepted = true;
      best.x = xt;
      best.g = gt;
      best.f = ft;
      best.step = step;
      if (clipped || dot(gt, dir) >= opts.curvature * gd)
        return best;
      lo = step;
      step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
    }
    return best;
  }
}  // namespace

// --- Bounds -----------------------------------------------------------------

Bounds Bounds::unbounded(std::size_t n) { return {std::vector<double>(n, -kInf)}; }

Bounds Bounds::uniform(std::size_t n, double lower) {
  return {std::vector<double>(n, lower)};
}

void Bounds::project(std::span<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::max(x[i], lower[i]);
}

bool Bounds::feasible(std::span<const double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lower[i]))
      return false;
  return true;
}

// --- options ----------------------------------------------------------------

void OptOptions::validate() const {
  if (memory < 1)
    throw DomainError("optimizer memory must be at least 1");
  if (max_iters < 1)
    throw DomainError("max_iters must be at least 1");
  if (!(grad_tol > 0.0))
    throw DomainError("grad_tol must be positive");
  if (!(rel_f_tol > 0.0))
    throw DomainError("rel_f_tol must be positive");
  if (!(sufficient_decrease > 0.0 && sufficient_decrease < curvature
        && curvature < 1.0))
    throw DomainError("line search needs 0 < decrease < curvature < 1");
  if (max_line_search < 1)
    throw DomainError("max_line_search must be at least 1");
}

std::string_view status_name(OptStatus s) noexcept {
  switch (s) {
  case OptStatus::converged_grad:
    return "converged_grad";
  case OptStatus::converged_f:
    return "converged_f";
  case OptStatus::max_iters:
    return "max_iters";
  case OptStatus::line_search_failure:
    return "line_search_failure";
  }
  return "unknown";
}

double projected_gradient_norm(std::span<const double> x,
                               std::span<const double> g,
                               const Bounds &bounds) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double moved = std::max(x[i] - g[i], bounds.lower[i]) - x[i];
    m = std::max(m, std::abs(moved));
  }
  return m;
}

// --- minimize ---------------------------------------------------------------

MinimizeResult minimize(const Oracle &oracle, std::vector<double> x0,
                        const Bounds &bounds, const OptOptions &opts) {
  opts.validate();
  const std::size_t n = x0.size();
  if (bounds.lower.size() != n)
    throw ShapeError("bounds length differs from the variable count");

  MinimizeResult res;
  res.x = std::move(x0);
  bounds.project(res.x);
  std::vector<double> g(n);
  res.value = oracle(res.x, g);
  res.trace.evaluations = 1;
  if (!std::isfinite(res.value) || !all_finite(g))
    throw NumericalError("objective or gradient is not finite at the start "
                         "point (F = " + std::to_string(res.value) + ")");

  double pg = projected_gradient_norm(res.x, g, bounds);
  res.trace.records.push_back({0, res.value, pg, 0.0});

  std::deque<CurvaturePair> pairs;
  double gamma = 1.0;
  res.trace.status = OptStatus::max_iters;
  std::vector<bool> free(n);
  // Set when the last step met the F-change test (or changed F only at
  // rounding level) but the run continued.
  bool f_converged = false;

  for (std::size_t iter = 1; iter <= opts.max_iters; ++iter) {
    if (pg <= opts.grad_tol) {
      res.trace.status = OptStatus::converged_grad;
      break;
    }

    for (std::size_t i = 0; i < n; ++i)
      free[i] = !(res.x[i] <= bounds.lower[i] && g[i] > 0.0);

    LineSearchResult step;
    for (int attempt = 0; attempt < 2 && !step.accepted; ++attempt) {
      std::vector<double> dir;
      if (attempt == 0 && !pairs.empty()) {
        dir = quasi_newton_direction(g, free, pairs, gamma);
        if (!(dot(g, dir) < 0.0))
          continue;
      } else {
        if (attempt == 1 && pairs.empty() && iter > 1)
          break;
        pairs.clear();
        dir.resize(n);
        for (std::size_t i = 0; i < n; ++i)
          dir[i] = free[i] ? -g[i] : 0.0;
      }
      const double step0 =
          pairs.empty() ? std::min(1.0, 1.0 / std::max(norm_inf(dir), 1e-300))
                        : 1.0;
      step = projected_search(oracle, res.x, res.value, g, dir, step0, bounds,
                              opts, res.trace.evaluations);
    }
    if (!step.accepted) {
      res.trace.status = f_converged ? OptStatus::converged_f
                                     : OptStatus::line_search_failure;
      break;
    }

    CurvaturePair cp;
    cp.s.resize(n);
    cp.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cp.s[i] = step.x[i] - res.x[i];
      cp.y[i] = step.g[i] - g[i];
    }
    const double sy = dot(cp.s, cp.y);
    if (sy > 1e-10 * norm2(cp.s) * norm2(cp.y)) {
      cp.rho = 1.0 / sy;
      gamma = sy / dot(cp.y, cp.y);
      pairs.push_back(std::move(cp));
      if (pairs.size() > opts.memory)
        pairs.pop_front();
    }

    const double prev = res.value;
    const double prev_pg = pg;
    res.x = std::move(step.x);
    g = std::move(step.g);
    res.value = step.f;
    pg = projected_gradient_norm(res.x, g, bounds);
    res.trace.records.push_back({iter, res.value, pg, step.step});

    if (pg <= opts.grad_tol) {
      res.trace.status = OptStatus::converged_grad;
      break;
    }
    // A change at rounding level says nothing about progress; keep going
    // while the projected gradient still shrinks.
    const double change = std::abs(prev - res.value);
    const double scale = std::max(std::abs(prev), std::abs(res.value));
    const bool unresolved = change <= kRoundingChange * scale && pg < prev_pg;
    f_converged = change <= std::max(opts.rel_f_tol, kRoundingChange) * scale;
    if (change <= opts.rel_f_tol * scale && !unresolved) {
      res.trace.status = OptStatus::converged_f;
      break;
    }
  }
  return res;
}

// --- GCP fitting ------------------------------------------------------------

Bounds factor_bounds(const FitProblem &p) {
  Bounds b;
  b.lower.reserve(parameter_count(p.shape(), p.rank(), false));
  for (std::size_t k = 0; k < p.shape().order(); ++k)
    b.lower.insert(b.lower.end(), p.shape().dim(k) * p.rank(),
                   p.lower_bounds()[k]);
  return b;
}

Oracle gcp_oracle(const FitProblem &p) {
  const bool fast = p.loss().kind() == LossKind::gaussian
                    && p.layout() != DataLayout::scarce
                    && p.weights().kind() == WeightTensor::Kind::uniform;
  return [&p, fast](std::span<const double> v, std::span<double> grad) {
    const KruskalTensor m = vec2kt(v, p.shape(), p.rank(), false);
    const Gradient fg = fast ? gaussian_fast_fg(p, m) : gcp_fg(p, m);
    std::size_t offset = 0;
    for (const Matrix &gk : fg.factor_grads) {
      std::copy(gk.data(), gk.data() + gk.size(), grad.begin() + offset);
      offset += static_cast<std::size_t>(gk.size());
    }
    return fg.value;
  };
}

FitResult fit_gcp(const FitProblem &p, const KruskalTensor &init,
                  const OptOptions &opts) {
  const KruskalTensor start = init.absorb_weights();
  p.check_model(start);
  const Oracle oracle = gcp_oracle(p);
  MinimizeResult mr = minimize(oracle, kt2vec(start), factor_bounds(p), opts);
  KruskalTensor fitted = vec2kt(mr.x, p.shape(), p.rank(), false);
  return {normalize(fitted), mr.value, std::move(mr.trace), opts.seed};
}

FitResult fit_gcp(const FitProblem &p, const OptOptions &opts) {
  const bool nonneg = std::all_of(p.lower_bounds().begin(),
                                  p.lower_bounds().end(),
                                  [](double b) { return b == 0.0; });
  return fit_gcp(p, default_init(p.shape(), p.rank(), nonneg, opts.seed),
                 opts);
}

MultiStartResult fit_gcp_multistart(const FitProblem &p,
                                    std::span<const std::uint64_t> seeds,
                                    OptOptions opts) {
  if (seeds.empty())
    throw DomainError("multi-start fitting needs at least one seed");
  MultiStartResult out;
  out.runs.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    opts.seed = s;
    out.runs.push_back(fit_gcp(p, opts));
    if (out.runs.back().value < out.runs[out.best].value)
      out.best = out.runs.size() - 1;
  }
  return out;
}

KruskalTensor default_init(const Shape &shape, std::size_t rank,
                           bool nonnegative, std::uint64_t seed) {
  if (rank < 1)
    throw ShapeError("rank must be at least 1");
  Rng rng(seed);
  std::vector<Matrix> factors;
  factors.reserve(shape.order());
  const auto r = static_cast<Eigen::Index>(rank);
  for (std::size_t n : shape.dims()) {
    Matrix a(static_cast<Eigen::Index>(n), r);
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        a(i, j) = nonnegative ? rng.uniform() : 0.1 * rng.normal();
    factors.push_back(std::move(a));
  }
  return KruskalTensor(std::move(factors));
}

KruskalTensor default_init(const Shape &shape, std::size_t rank,
                           const LossSpec &loss, std::uint64_t seed) {
  return default_init(shape, rank, loss.bounded(), seed);
}

}  // namespace gcp
