//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Every check compares library output against the
// brute-force references in oracles.hpp or against closed forms.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gcp/error.hpp"
#include "gcp/holdout.hpp"
#include "gcp/kernel.hpp"
#include "gcp/optimizer.hpp"
#include "gcp/sampling.hpp"
#include "oracles.hpp"

using namespace gcp;

namespace {

using Dims = std::vector<std::size_t>;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Traces of every fit run by the criteria, checked in criterion 10.
std::vector<OptTrace> g_traces;

double max_abs(const Matrix &a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double frobenius_rel(const DenseTensor &a, const DenseTensor &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Random problem of one loss in the given layout: data inside the loss's
// domain, factors giving feasible model values.
struct Instance {
  FitProblem problem;
  std::vector<Matrix> factors;
};

Instance make_instance(const LossSpec &loss, const Dims &dims, std::size_t r,
                       bool scarce, Rng &rng) {
  std::vector<Matrix> f = oracle::random_factors_for(loss, rng, dims, r);
  DenseTensor x = oracle::random_data(loss, dims, rng);
  if (loss.kind() == LossKind::huber)
    oracle::nudge_huber(x, f, loss.params().delta);
  if (!scarce)
    return {FitProblem::dense(x, loss, r), f};
  const auto obs = oracle::random_mask(rng, x.size(), 0.5);
  return {FitProblem::scarce(oracle::gather(x, obs), loss, r), f};
}

const std::vector<Dims> kSmallShapes{{5, 4, 3}, {4, 3, 2, 2}};
constexpr double kStep = 1e-5;
constexpr double kFdLimit = 1e-5;

// --- 1 ----------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  double worst = 0.0;
  std::string worst_case;
  std::size_t cases = 0;
  for (LossKind kind : all_loss_kinds())
    for (const Dims &dims : kSmallShapes)
      for (std::size_t r = 1; r <= 3; ++r)
        for (bool scarce : {false, true}) {
          const LossSpec loss(kind);
          const Instance in = make_instance(loss, dims, r, scarce, rng);
          const Gradient g = gcp_fg(in.problem, KruskalTensor(in.factors));
          const auto errs = oracle::fd_factor_errors(
              [&](const std::vector<Matrix> &ff) {
                return gcp_fg(in.problem, KruskalTensor(ff)).value;
              },
              in.factors, g.factor_grads, kStep);
          ++cases;
          for (double e : errs)
            if (e > worst) {
              worst = e;
              worst_case = std::string(loss.name()) + (scarce ? "/scarce" : "/dense");
            }
        }
  const double secs = seconds_since(t0);
  return {worst < kFdLimit && secs < 60.0,
          std::to_string(cases) + " problems, worst rel err " + fmt(worst) + " ("
              + worst_case + "), " + fmt(secs) + " s"};
}

// --- 2 ----------------------------------------------------------------------

Outcome weighted_suite() {
  Rng rng(1002);
  double worst = 0.0;
  std::size_t cases = 0;
  for (LossKind kind : all_loss_kinds())
    for (const Dims &dims : kSmallShapes)
      for (std::size_t r = 1; r <= 3; ++r)
        for (bool scarce : {false, true}) {
          const LossSpec loss(kind);
          Instance in = make_instance(loss, dims, r, scarce, rng);
          if (r == 2)
            in.problem.set_regularization({0.1});
          Vector lambda(static_cast<Eigen::Index>(r));
          for (Eigen::Index j = 0; j < lambda.size(); ++j)
            lambda(j) = rng.uniform(0.5, 2.0);
          const auto F = [&](const std::vector<Matrix> &ff, const Vector &l) {
            return gcp_fg_weighted_lambda(in.problem, KruskalTensor(ff, l)).value;
          };
          const WeightedGradient g =
              gcp_fg_weighted_lambda(in.problem, KruskalTensor(in.factors, lambda));
          for (double e : oracle::fd_factor_errors(
                   [&](const std::vector<Matrix> &ff) { return F(ff, lambda); },
                   in.factors, g.factor_grads, kStep))
            worst = std::max(worst, e);
          const double floor = 1e-3 * g.weight_grad.cwiseAbs().maxCoeff();
          for (Eigen::Index j = 0; j < lambda.size(); ++j) {
            const double h = kStep * std::max(1.0, std::abs(lambda(j)));
            Vector lp = lambda;
            const double fd = oracle::central_difference(
                [&](double v) {
                  lp(j) = v;
                  return F(in.factors, lp);
                },
                lambda(j), h);
            worst = std::max(worst, oracle::relative_error(g.weight_grad(j), fd, floor));
          }
          ++cases;
        }
  return {worst < kFdLimit, std::to_string(cases) + " problems (factors and weights), worst rel err "
                                + fmt(worst)};
}

// --- 3 ----------------------------------------------------------------------

Outcome fast_path() {
  Rng rng(1003);
  const LossSpec gauss(LossKind::gaussian);
  double worst = 0.0;
  bool budget_ok = true;
  for (int t = 0; t < 20; ++t) {
    const std::size_t d = 3 + rng.below(2);
    Dims dims(d);
    for (std::size_t &n : dims)
      n = 2 + rng.below(6);
    const std::size_t r = 1 + rng.below(4);
    FitProblem p = FitProblem::dense(oracle::random_dense(rng, dims, -2.0, 2.0), gauss, r);
    if (t % 2)
      p.set_regularization({rng.uniform(0.0, 0.5)});
    Vector lambda = Vector::Ones(static_cast<Eigen::Index>(r));
    for (Eigen::Index j = 0; j < lambda.size(); ++j)
      lambda(j) = rng.uniform(0.5, 2.0);
    const KruskalTensor m = t % 3 == 0
                                ? KruskalTensor(oracle::random_factors(rng, dims, r), lambda)
                                : KruskalTensor(oracle::random_factors(rng, dims, r));
    const Gradient a = gaussian_fast_fg(p, m), b = gcp_fg(p, m);
    worst = std::max(worst, std::abs(a.value - b.value));
    for (std::size_t k = 0; k < d; ++k)
      worst = std::max(worst, max_abs(a.factor_grads[k] - b.factor_grads[k]));
  }
  const double dense_worst = worst;
  worst = 0.0;
  std::size_t max_nnz = 0;
  for (int t = 0; t < 20; ++t) {
    const Dims dims = t % 2 ? Dims{20, 20, 20} : Dims{12, 10, 9, 8};
    const std::size_t r = 1 + rng.below(4);
    const double density = rng.uniform(0.002, 0.01);
    DenseTensor x{Shape(dims)};
    std::vector<std::size_t> nz;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (rng.uniform() < density) {
        x[i] = rng.uniform(-2.0, 2.0);
        nz.push_back(i);
      }
    max_nnz = std::max(max_nnz, nz.size());
    FitProblem p = FitProblem::sparse(oracle::gather(x, nz), gauss, r);
    if (t % 2)
      p.set_regularization({rng.uniform(0.0, 0.5)});
    const KruskalTensor m(oracle::random_factors(rng, dims, r));
    const Gradient b = gcp_fg(p, m);
    // With the dense budget below |I| the generic path cannot run; the fast
    // path must still succeed, so it never holds a dense Y or model.
    p.set_dense_budget(x.size() - 1);
    try {
      gcp_fg(p, m);
      budget_ok = false;
    } catch (const CapacityError &) {
    }
    const Gradient a = gaussian_fast_fg(p, m);
    worst = std::max(worst, std::abs(a.value - b.value));
    for (std::size_t k = 0; k < dims.size(); ++k)
      worst = std::max(worst, max_abs(a.factor_grads[k] - b.factor_grads[k]));
  }
  return {dense_worst <= 1e-10 && worst <= 1e-10 && budget_ok,
          "dense max diff " + fmt(dense_worst) + ", sparse max diff " + fmt(worst)
              + " (nnz <= " + std::to_string(max_nnz) + ", dense budget "
              + (budget_ok ? "respected" : "VIOLATED") + ")"};
}

// --- 4 ----------------------------------------------------------------------

Outcome mttkrp_oracle() {
  Rng rng(1004);
  double worst = 0.0;
  std::size_t checks = 0;
  for (const Dims &dims : std::vector<Dims>{{6, 5, 4, 3}, {5, 4, 3}, {4, 6}, {3, 2, 4, 2}, {6, 5, 4}})
    for (std::size_t r = 1; r <= 4; ++r) {
      const KruskalTensor m(oracle::random_factors(rng, dims, r));
      const DenseTensor y = oracle::random_dense(rng, dims);
      DenseTensor sparse_y{Shape(dims)};
      std::vector<std::size_t> nz;
      for (std::size_t i = 0; i < y.size(); ++i)
        if (rng.uniform() < 0.3) {
          sparse_y[i] = y[i];
          nz.push_back(i);
        }
      const CooTensor coo = oracle::gather(sparse_y, nz);
      for (std::size_t k = 0; k < dims.size(); ++k) {
        const Matrix z = oracle::zk(m.factors(), k);
        worst = std::max(worst, max_abs(mttkrp(y, m, k) - oracle::unfold(y, k) * z));
        worst = std::max(worst,
                         max_abs(mttkrp(coo, m, k) - oracle::unfold(sparse_y, k) * z));
        checks += 2;
      }
    }
  return {worst <= 1e-12,
          std::to_string(checks) + " products, max abs diff " + fmt(worst)};
}

// --- 5 ----------------------------------------------------------------------

Outcome masked_law() {
  Rng rng(1005);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  bool exact = true;
  double scarce_diff = 0.0, mean_diff = 0.0;
  std::size_t cases = 0;
  for (LossKind kind : all_loss_kinds())
    for (const Dims &dims : kSmallShapes)
      for (double p : {0.2, 0.5, 0.8}) {
        const LossSpec loss(kind);
        const DenseTensor x = oracle::random_data(loss, dims, rng);
        const auto obs = oracle::random_mask(rng, x.size(), p);
        std::vector<bool> seen(x.size(), false);
        for (std::size_t i : obs)
          seen[i] = true;
        DenseTensor other = oracle::random_data(loss, dims, rng);
        const double junk[] = {nan, inf, -1e300, -7.0, 0.5};
        for (std::size_t i = 0; i < x.size(); ++i)
          other[i] = seen[i] ? x[i] : junk[rng.below(5)];
        const std::vector<Matrix> f = oracle::random_factors_for(loss, rng, dims, 2);
        const KruskalTensor m(f);
        const WeightTensor w = WeightTensor::mask(x.shape(), obs);
        const Gradient a = gcp_fg(FitProblem::dense(x, loss, 2, w), m);
        const Gradient b = gcp_fg(FitProblem::dense(other, loss, 2, w), m);
        const Gradient c = gcp_fg(FitProblem::scarce(oracle::gather(x, obs), loss, 2), m);
        exact = exact && a.value == b.value && a.factor_grads == b.factor_grads;
        scarce_diff = std::max(scarce_diff, std::abs(c.value - a.value) / std::abs(a.value));
        for (std::size_t k = 0; k < dims.size(); ++k)
          scarce_diff = std::max(scarce_diff, max_abs(c.factor_grads[k] - a.factor_grads[k])
                                                  / std::max(1.0, max_abs(a.factor_grads[k])));
        const double ref = oracle::objective(loss, x, oracle::uniform_pairs(obs), f, {}, {});
        mean_diff = std::max(mean_diff, std::abs(a.value - ref) / std::max(1.0, std::abs(ref)));
        ++cases;
      }
  return {exact && scarce_diff <= 1e-13 && mean_diff <= 1e-13,
          std::to_string(cases) + " masks, unobserved junk " + (exact ? "no effect" : "CHANGED F/G")
              + ", scarce vs masked rel diff " + fmt(scarce_diff) + ", mean rel diff "
              + fmt(mean_diff)};
}

// --- 6 ----------------------------------------------------------------------

Outcome recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const KruskalTensor truth = random_model(Shape{20, 20, 20}, 2, 606);
  const DenseTensor x = full(truth);
  const FitProblem p = FitProblem::dense(x, LossSpec(LossKind::gaussian), 2);
  OptOptions o;
  o.grad_tol = 1e-14;
  o.rel_f_tol = 1e-16;
  o.max_iters = 2000;
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const MultiStartResult ms = fit_gcp_multistart(p, seeds, o);
  for (const FitResult &r : ms.runs)
    g_traces.push_back(r.trace);
  const FitResult &best = ms.runs[ms.best];
  const double err = frobenius_rel(full(normalize(best.model)), x);
  const double secs = seconds_since(t0);
  return {best.value < 1e-8 && err < 1e-4 && secs < 120.0,
          "best F " + fmt(best.value) + ", rel Frobenius err " + fmt(err) + ", "
              + fmt(secs) + " s"};
}

// --- 7 ----------------------------------------------------------------------

Outcome poisson_recovery() {
  // Factor entries in [0.63, 1.357] put rank-2 rates in [0.5, 5].
  const double lo = 0.63, hi = 1.357;
  int good = 0;
  std::string errs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const KruskalTensor truth = random_model(Shape{30, 30, 30}, 2, 700 + seed, lo, hi);
    const DenseTensor x = sample_from_model(truth, LossKind::poisson, 710 + seed);
    const FitProblem p = FitProblem::dense(x, LossSpec(LossKind::poisson), 2);
    OptOptions o;
    o.grad_tol = 1e-8;
    o.rel_f_tol = 1e-12;
    o.max_iters = 1000;
    o.seed = seed;
    const FitResult r = fit_gcp(p, o);
    g_traces.push_back(r.trace);
    const double e = frobenius_rel(full(r.model), full(truth));
    good += e < 0.15;
    errs += (errs.empty() ? "" : " ") + fmt(e);
  }
  return {good >= 4, std::to_string(good) + "/5 seeds under 0.15 (rel errs " + errs + ")"};
}

// --- 8 ----------------------------------------------------------------------

Outcome prediction() {
  const KruskalTensor truth = random_model(Shape{50, 50, 50}, 3, 808);
  const DenseTensor x = sample_from_model(truth, LossKind::bernoulli_odds, 809);
  const std::vector<LossKind> kinds{LossKind::gaussian, LossKind::bernoulli_odds,
                                    LossKind::bernoulli_logit};
  struct Trial {
    std::vector<double> loglik;
    std::vector<OptTrace> traces;
  };
  const auto trial = [&](std::uint64_t t) {
    const Holdout h = make_holdout(x, 50, 50, 820 + t);
    Trial out;
    for (LossKind kind : kinds) {
      const LossSpec loss(kind);
      const FitProblem p = FitProblem::dense(x, loss, 3, h.train_weights());
      OptOptions o;
      o.max_iters = 300;
      o.seed = t;
      const FitResult r = fit_gcp(p, o);
      out.loglik.push_back(heldout_loglik(r.model, h, loss));
      out.traces.push_back(r.trace);
    }
    return out;
  };
  std::vector<std::future<Trial>> jobs;
  for (std::uint64_t t = 0; t < 20; ++t)
    jobs.push_back(std::async(std::launch::async, trial, t));
  std::vector<std::vector<double>> ll(kinds.size());
  for (auto &j : jobs) {
    Trial tr = j.get();
    for (std::size_t l = 0; l < kinds.size(); ++l)
      ll[l].push_back(tr.loglik[l]);
    for (OptTrace &t : tr.traces)
      g_traces.push_back(std::move(t));
  }
  const double g = median(ll[0]), odds = median(ll[1]), logit = median(ll[2]);
  return {odds > g && logit > g, "median held-out log-likelihood: gaussian " + fmt(g)
                                     + ", bernoulli_odds " + fmt(odds)
                                     + ", bernoulli_logit " + fmt(logit)};
}

// --- 9 ----------------------------------------------------------------------

// Direct evaluation of each loss; eps enters every log and denominator.
double direct_value(const LossSpec &s, double x, double m) {
  const double eps = s.params().epsilon;
  const double me = m + eps;
  switch (s.kind()) {
  case LossKind::gaussian:
    return (x - m) * (x - m);
  case LossKind::bernoulli_odds:
    return std::log(1.0 + m) - x * std::log(me);
  case LossKind::bernoulli_logit:
    return std::log(1.0 + std::exp(m)) - x * m;
  case LossKind::poisson:
    return m - x * std::log(me);
  case LossKind::poisson_log:
    return std::exp(m) - x * m;
  case LossKind::gamma:
    return x / me + std::log(me);
  case LossKind::rayleigh:
    return 2.0 * std::log(me) + std::numbers::pi / 4.0 * (x / me) * (x / me);
  case LossKind::negbinom:
    return (s.params().failures + x) * std::log(1.0 + m) - x * std::log(me);
  case LossKind::huber: {
    const double d = s.params().delta, r = std::abs(x - m);
    return r <= d ? r * r : 2.0 * d * r - d * d;
  }
  case LossKind::beta_div: {
    const double b = s.params().beta;
    return std::pow(b < 1.0 ? me : m, b) / b
           - x * std::pow(b < 2.0 ? me : m, b - 1.0) / (b - 1.0);
  }
  }
  return std::nan("");
}

double close(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Outcome loss_catalog() {
  const double eps = 1e-10;
  const double ln2 = std::log(2.0);
  double worst = 0.0;
  const auto v = [](LossKind k, LossParams p, double x, double m) {
    return loss_value(LossSpec(k, p), x, m);
  };
  // Worked examples.
  worst = std::max(worst, close(v(LossKind::gaussian, {}, 3, 1), 4.0));
  worst = std::max(worst, close(v(LossKind::poisson, {}, 0, 5), 5.0));
  worst = std::max(worst, close(v(LossKind::bernoulli_odds, {}, 0, 1), ln2));
  worst = std::max(worst, close(v(LossKind::rayleigh, {}, 2, 2),
                                2.0 * std::log(2.0 + eps)
                                    + std::numbers::pi / 4.0 * std::pow(2.0 / (2.0 + eps), 2)));
  worst = std::max(worst, close(v(LossKind::negbinom, {.failures = 2}, 0, 1), 2.0 * ln2));
  worst = std::max(worst, close(v(LossKind::huber, {.delta = 0.25}, 1, 0.5), 0.1875));
  worst = std::max(worst, close(loss_deriv(LossSpec(LossKind::gaussian), 3, 1), -4.0));
  worst = std::max(worst, close(loss_deriv(LossSpec(LossKind::poisson), 2, 2),
                                1.0 - 2.0 / (2.0 + eps)));
  bool exact = v(LossKind::beta_div, {.beta = 1}, 2, 1.5) == v(LossKind::poisson, {}, 2, 1.5);

  // Every loss against its direct formula, derivatives against central
  // differences.
  Rng rng(1009);
  double deriv_worst = 0.0;
  const std::vector<LossParams> variants{
      {}, {.delta = 1.0}, {.beta = 2.0}, {.beta = 1.5}, {.beta = -0.5}, {.failures = 3.5}};
  for (LossKind kind : all_loss_kinds())
    for (const LossParams &params : variants) {
      const LossSpec s(kind, params);
      for (int i = 0; i < 200; ++i) {
        const DenseTensor xs = oracle::random_data(s, {1}, rng);
        const double x = xs[0];
        const double m = s.bounded() ? rng.uniform(0.05, 4.0) : rng.uniform(-3.0, 3.0);
        worst = std::max(worst, close(loss_value(s, x, m), direct_value(s, x, m)));
        if (kind == LossKind::huber
            && std::abs(std::abs(x - m) - s.params().delta) < 1e-3)
          continue;
        const double h = 1e-6;
        const double fd = (s.value(x, m + h) - s.value(x, m - h)) / (2.0 * h);
        deriv_worst = std::max(deriv_worst,
                               oracle::relative_error(loss_deriv(s, x, m), fd, 1e-3));
      }
    }

  // Limits of the beta-divergence at 100 random points, bit for bit.
  for (int i = 0; i < 100; ++i) {
    const double count = static_cast<double>(rng.below(11));
    const double x = rng.uniform(0.05, 5.0);
    const double m = rng.uniform(0.0, 5.0);
    exact = exact
            && v(LossKind::beta_div, {.beta = 1}, count, m) == v(LossKind::poisson, {}, count, m)
            && v(LossKind::beta_div, {.beta = 0}, x, m) == v(LossKind::gamma, {}, x, m);
  }
  return {worst <= 1e-12 && deriv_worst <= 1e-6 && exact,
          "max rel diff vs formulas " + fmt(worst) + ", derivative fd " + fmt(deriv_worst)
              + ", beta limits " + (exact ? "exact" : "MISMATCH")};
}

// --- 10 ---------------------------------------------------------------------

bool monotone(const OptTrace &t) {
  for (std::size_t i = 1; i < t.records.size(); ++i)
    if (!(t.records[i].value <= t.records[i - 1].value))
      return false;
  return true;
}

Outcome optimizer_suite() {
  OptOptions tight;
  tight.grad_tol = 1e-10;
  tight.rel_f_tol = 1e-16;
  bool ok = true;
  std::vector<std::string> failed;
  const auto expect = [&](bool cond, const std::string &what) {
    if (!cond) {
      ok = false;
      failed.push_back(what);
    }
  };
  std::vector<OptTrace> traces;
  std::size_t points = 0;
  bool feasible = true;
  // Runs minimize while checking every point the oracle sees.
  const auto run = [&](const Oracle &f, std::vector<double> x0, const Bounds &b,
                       const OptOptions &o) {
    const Oracle checked = [&](std::span<const double> x, std::span<double> g) {
      ++points;
      feasible = feasible && b.feasible(x);
      return f(x, g);
    };
    MinimizeResult r = minimize(checked, std::move(x0), b, o);
    traces.push_back(r.trace);
    return r;
  };

  const auto parabola = [](double c) {
    return Oracle([c](std::span<const double> x, std::span<double> g) {
      g[0] = 2.0 * (x[0] - c);
      return (x[0] - c) * (x[0] - c);
    });
  };
  const MinimizeResult p1 = run(parabola(3.0), {0.5}, Bounds::uniform(1, 0.0), tight);
  expect(std::abs(p1.x[0] - 3.0) <= 1e-8, "(a-3)^2");
  const MinimizeResult p2 = run(parabola(-2.0), {5.0}, Bounds::uniform(1, 0.0), tight);
  std::vector<double> g(1);
  parabola(-2.0)(p2.x, g);
  expect(p2.x[0] == 0.0 && projected_gradient_norm(p2.x, g, Bounds::uniform(1, 0.0)) == 0.0,
         "(a+2)^2");

  const Oracle rosen = [](std::span<const double> x, std::span<double> gr) {
    const double a = x[0], b = x[1];
    gr[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
    gr[1] = 200.0 * (b - a * a);
    return (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a);
  };
  const MinimizeResult ro = run(rosen, {-1.2, 1.0}, Bounds::unbounded(2), tight);
  expect(std::abs(ro.x[0] - 1.0) <= 1e-6 && std::abs(ro.x[1] - 1.0) <= 1e-6, "rosenbrock");

  const auto quadratic = [](Matrix a, Vector b) {
    return Oracle([a, b](std::span<const double> x, std::span<double> gr) {
      const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
      Eigen::Map<Vector>(gr.data(), static_cast<Eigen::Index>(gr.size())) = a * xv - b;
      return 0.5 * xv.dot(a * xv) - b.dot(xv);
    });
  };
  const Matrix d = Vector::Map(std::vector<double>{1.0, 10.0}.data(), 2).asDiagonal();
  for (const Vector &b : {(Vector(2) << 1.0, 10.0).finished(), (Vector(2) << 0.2, 10.0).finished()}) {
    const MinimizeResult q = run(quadratic(d, b), {3.0, 3.0}, Bounds::uniform(2, 0.5), tight);
    for (Eigen::Index i = 0; i < 2; ++i)
      expect(std::abs(q.x[static_cast<std::size_t>(i)] - std::max(b(i) / d(i, i), 0.5)) <= 1e-9,
             "bounded quadratic");
  }

  Rng rng(1010);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + rng.below(19);
    const Matrix q = oracle::random_matrix(rng, n, n);
    const Matrix a = q * q.transpose()
                     + Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const Vector b = oracle::random_matrix(rng, n, 1);
    const Vector xs = a.ldlt().solve(b);
    OptOptions o = tight;
    o.grad_tol = 1e-12;
    o.max_iters = 50;
    const MinimizeResult r = run(quadratic(a, b), std::vector<double>(n, 0.0), Bounds::unbounded(n), o);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(r.x[i] - xs(static_cast<Eigen::Index>(i))));
    expect(err <= 1e-8, "convex quadratic");
  }

  // Bounded GCP problems through the same driver.
  for (LossKind kind : {LossKind::poisson, LossKind::bernoulli_odds, LossKind::gamma,
                        LossKind::rayleigh, LossKind::negbinom, LossKind::beta_div}) {
    const LossSpec loss(kind);
    const FitProblem p = FitProblem::dense(oracle::random_data(loss, {6, 5, 4}, rng), loss, 2);
    OptOptions o;
    o.max_iters = 100;
    run(gcp_oracle(p), kt2vec(default_init(p.shape(), 2, loss, 3)), factor_bounds(p), o);
  }
  expect(feasible, "feasibility");

  std::size_t all = traces.size() + g_traces.size();
  bool mono = std::all_of(traces.begin(), traces.end(), monotone)
              && std::all_of(g_traces.begin(), g_traces.end(), monotone);
  expect(mono, "monotonicity");

  std::string detail = std::to_string(all) + " traces monotone, " + std::to_string(points)
                       + " evaluated points feasible";
  for (const std::string &f : failed)
    detail += "; failed: " + f;
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    const char *name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"gradient theorem suite", gradient_suite},
      {"weighted-model gradients", weighted_suite},
      {"gaussian fast path", fast_path},
      {"mttkrp oracle", mttkrp_oracle},
      {"masked-data law", masked_law},
      {"noiseless gaussian recovery", recovery},
      {"poisson statistical recovery", poisson_recovery},
      {"prediction protocol", prediction},
      {"loss catalog values", loss_catalog},
      {"optimizer suite", optimizer_suite},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu  %s  %-30s %s\n", i + 1, o.pass ? "PASS" : "FAIL",
                criteria[i].name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
