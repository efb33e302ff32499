//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include <doctest.h>

#include <cmath>
#include <limits>

#include "gcp/error.hpp"
#include "gcp/optimizer.hpp"
#include "oracles.hpp"

using namespace gcp;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

OptOptions tight() {
  OptOptions o;
  o.grad_tol = 1e-10;
  o.rel_f_tol = 1e-16;
  return o;
}

// Records every evaluated point so feasibility can be checked afterwards.
struct Recorder {
  Oracle inner;
  std::vector<std::vector<double>> points;

  Oracle oracle() {
    return [this](std::span<const double> x, std::span<double> g) {
      points.emplace_back(x.begin(), x.end());
      return inner(x, g);
    };
  }
};

void check_trace(const OptTrace &t) {
  REQUIRE_FALSE(t.records.empty());
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    CHECK(t.records[i].value <= t.records[i - 1].value);
    CHECK(t.records[i].iteration == i);
    CHECK(t.records[i].step > 0.0);
  }
}

Oracle quadratic(const Matrix &a, const Vector &b) {
  return [a, b](std::span<const double> x, std::span<double> g) {
    const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Vector grad = a * xv - b;
    Eigen::Map<Vector>(g.data(), static_cast<Eigen::Index>(g.size())) = grad;
    return 0.5 * xv.dot(a * xv) - b.dot(xv);
  };
}

double rosenbrock(std::span<const double> x, std::span<double> g) {
  const double a = x[0], b = x[1];
  g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
  g[1] = 200.0 * (b - a * a);
  return (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a);
}
}  // namespace

TEST_CASE("option validation") {
  OptOptions o;
  CHECK_NOTHROW(o.validate());
  o.memory = 0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = {};
  o.curvature = 1e-5;
  CHECK_THROWS_AS(o.validate(), DomainError);
  o = {};
  o.grad_tol = 0.0;
  CHECK_THROWS_AS(o.validate(), DomainError);
  CHECK(status_name(OptStatus::converged_f) == "converged_f");
}

TEST_CASE("bounds") {
  const Bounds b = Bounds::uniform(3, 0.0);
  std::vector<double> x{-1.0, 0.5, 0.0};
  CHECK_FALSE(b.feasible(x));
  b.project(x);
  CHECK(x == std::vector<double>{0.0, 0.5, 0.0});
  CHECK(b.feasible(x));
  CHECK(Bounds::unbounded(2).feasible(std::vector<double>{-1e300, 5.0}));
  const std::vector<double> g{1.0, -2.0, -0.25};
  CHECK(projected_gradient_norm(x, g, b) == 2.0);
  CHECK(projected_gradient_norm(std::vector<double>{0.0}, std::vector<double>{3.0},
                                Bounds::uniform(1, 0.0))
        == 0.0);
}

TEST_CASE("interior minimum of a bounded parabola") {
  const Oracle f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 3.0);
    return (x[0] - 3.0) * (x[0] - 3.0);
  };
  const MinimizeResult r = minimize(f, {0.5}, Bounds::uniform(1, 0.0), tight());
  CHECK(r.x[0] == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(r.trace.status == OptStatus::converged_grad);
  check_trace(r.trace);
}

TEST_CASE("active bound") {
  const Oracle f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] + 2.0);
    return (x[0] + 2.0) * (x[0] + 2.0);
  };
  Recorder rec{f, {}};
  const Bounds b = Bounds::uniform(1, 0.0);
  const MinimizeResult r = minimize(rec.oracle(), {5.0}, b, tight());
  CHECK(r.x[0] == 0.0);
  std::vector<double> g(1);
  f(r.x, g);
  CHECK(projected_gradient_norm(r.x, g, b) == 0.0);
  CHECK(r.trace.status == OptStatus::converged_grad);
  for (const auto &p : rec.points)
    CHECK(b.feasible(p));
}

TEST_CASE("infeasible start is projected") {
  const Oracle f = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2.0 * (x[0] - 1.0);
    return (x[0] - 1.0) * (x[0] - 1.0);
  };
  const MinimizeResult r = minimize(f, {-4.0}, Bounds::uniform(1, 0.0), tight());
  CHECK(r.x[0] == doctest::Approx(1.0));
}

TEST_CASE("rosenbrock") {
  const MinimizeResult r =
      minimize(rosenbrock, {-1.2, 1.0}, Bounds::unbounded(2), tight());
  CHECK(std::abs(r.x[0] - 1.0) <= 1e-6);
  CHECK(std::abs(r.x[1] - 1.0) <= 1e-6);
  check_trace(r.trace);
}

TEST_CASE("separable quadratic with lower bounds") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 10.0;
  for (const Vector &b : {(Vector(2) << 1.0, 10.0).finished(),
                         (Vector(2) << 0.2, 10.0).finished(),
                         (Vector(2) << -3.0, 2.0).finished()}) {
    Recorder rec{quadratic(d, b), {}};
    const Bounds bounds = Bounds::uniform(2, 0.5);
    const MinimizeResult r = minimize(rec.oracle(), {3.0, 3.0}, bounds, tight());
    for (Eigen::Index i = 0; i < 2; ++i) {
      CHECK(r.x[static_cast<std::size_t>(i)]
            == doctest::Approx(std::max(b(i) / d(i, i), 0.5)).epsilon(1e-9));
    }
    check_trace(r.trace);
    for (const auto &p : rec.points)
      CHECK(bounds.feasible(p));
  }
}

TEST_CASE("strictly convex quadratics converge within 50 iterations") {
  Rng rng(51);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    const Matrix q = oracle::random_matrix(rng, n, n);
    const Matrix a = q * q.transpose() + Matrix::Identity(static_cast<Eigen::Index>(n),
                                                          static_cast<Eigen::Index>(n));
    const Vector b = oracle::random_matrix(rng, n, 1);
    const Vector xstar = a.ldlt().solve(b);
    OptOptions o = tight();
    o.max_iters = 50;
    o.grad_tol = 1e-12;
    const MinimizeResult r =
        minimize(quadratic(a, b), std::vector<double>(n, 0.0), Bounds::unbounded(n), o);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      err = std::max(err, std::abs(r.x[i] - xstar(static_cast<Eigen::Index>(i))));
    CHECK(err <= 1e-8);
    CHECK(r.trace.records.size() <= 51);
    check_trace(r.trace);
  }
}

TEST_CASE("gradient certificate at convergence") {
  Rng rng(52);
  const std::size_t n = 8;
  const Matrix q = oracle::random_matrix(rng, n, n);
  const Matrix a = q * q.transpose() + 0.1 * Matrix::Identity(8, 8);
  const Vector b = oracle::random_matrix(rng, n, 1);
  const Bounds bounds = Bounds::uniform(n, 0.0);
  OptOptions o;
  o.rel_f_tol = 1e-16;
  const MinimizeResult r =
      minimize(quadratic(a, b), std::vector<double>(n, 1.0), bounds, o);
  REQUIRE(r.trace.status == OptStatus::converged_grad);
  std::vector<double> g(n);
  quadratic(a, b)(r.x, g);
  CHECK(projected_gradient_norm(r.x, g, bounds) <= o.grad_tol);
  CHECK(r.trace.records.back().projected_grad_norm <= o.grad_tol);
}

TEST_CASE("failure modes") {
  const Oracle nan_start = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::nan("");
  };
  CHECK_THROWS_AS(minimize(nan_start, {1.0}, Bounds::unbounded(1), {}),
                  NumericalError);

  // Gradient pointing the wrong way: no step can decrease F.
  const Oracle wrong = [](std::span<const double> x, std::span<double> g) {
    g[0] = -2.0 * x[0];
    return x[0] * x[0];
  };
  const MinimizeResult r = minimize(wrong, {1.0}, Bounds::unbounded(1), {});
  CHECK(r.trace.status == OptStatus::line_search_failure);
  CHECK(r.x[0] == 1.0);
  CHECK(r.value == 1.0);

  // Non-finite values beyond x = 2 are stepped around, not reported.
  const Oracle wall = [](std::span<const double> x, std::span<double> g) {
    if (x[0] > 2.0) {
      g[0] = 0.0;
      return kInf;
    }
    g[0] = 2.0 * (x[0] - 1.5);
    return (x[0] - 1.5) * (x[0] - 1.5);
  };
  const MinimizeResult w = minimize(wall, {-50.0}, Bounds::unbounded(1), tight());
  CHECK(w.x[0] == doctest::Approx(1.5));

  const OptOptions iters = [] {
    OptOptions o = tight();
    o.max_iters = 3;
    return o;
  }();
  const MinimizeResult capped =
      minimize(rosenbrock, {-1.2, 1.0}, Bounds::unbounded(2), iters);
  CHECK(capped.trace.status == OptStatus::max_iters);
  CHECK(capped.trace.records.size() == 4);
}

TEST_CASE("default initialization") {
  const Shape s{4, 3, 5};
  const KruskalTensor a = default_init(s, 2, LossSpec(LossKind::poisson), 9);
  const KruskalTensor b = default_init(s, 2, LossSpec(LossKind::poisson), 9);
  CHECK(a.factors() == b.factors());
  for (const Matrix &f : a.factors()) {
    CHECK(f.minCoeff() >= 0.0);
    CHECK(f.maxCoeff() < 1.0);
  }
  const KruskalTensor g = default_init(s, 2, LossSpec(LossKind::gaussian), 9);
  CHECK(g.factors() != a.factors());
  CHECK(g.factor(0).minCoeff() < 0.0);
  CHECK(default_init(s, 2, LossSpec(LossKind::gaussian), 10).factors() != g.factors());
  CHECK_THROWS_AS(default_init(s, 0, LossSpec(LossKind::gaussian), 1), ShapeError);
}

TEST_CASE("fit recovers a noiseless rank-one tensor") {
  Rng rng(53);
  const std::vector<std::size_t> dims{6, 5, 4};
  const std::vector<Matrix> truth = oracle::random_factors(rng, dims, 1, 0.5, 1.5);
  const FitProblem p =
      FitProblem::dense(full(KruskalTensor(truth)), LossSpec(LossKind::gaussian), 1);
  std::vector<Matrix> init = truth;
  for (Matrix &f : init)
    f.array() += 0.05 * oracle::random_matrix(rng, static_cast<std::size_t>(f.rows()), 1).array();
  OptOptions o;
  o.grad_tol = 1e-12;
  o.rel_f_tol = 1e-16;
  const FitResult r = fit_gcp(p, KruskalTensor(init), o);
  CHECK(r.value < 1e-10);
  CHECK(r.model.has_weights());
  check_trace(r.trace);
}

TEST_CASE("fits respect nonnegativity") {
  Rng rng(54);
  const std::vector<std::size_t> dims{6, 5, 4};
  const LossSpec loss(LossKind::bernoulli_odds);
  const FitProblem p = FitProblem::dense(oracle::random_data(loss, dims, rng), loss, 2);
  OptOptions o;
  o.max_iters = 200;
  const FitResult r = fit_gcp(p, o);
  for (const Matrix &f : r.model.factors())
    CHECK(f.minCoeff() >= 0.0);
  check_trace(r.trace);

  FitProblem g = FitProblem::dense(oracle::random_data(LossSpec(LossKind::gaussian), dims, rng),
                                   LossSpec(LossKind::gaussian), 2);
  g.set_lower_bounds({0.0});
  const FitResult rg = fit_gcp(g, o);
  for (const Matrix &f : rg.model.factors())
    CHECK(f.minCoeff() >= 0.0);
}

TEST_CASE("multi-start keeps the lowest objective") {
  Rng rng(55);
  const std::vector<std::size_t> dims{5, 4, 3};
  const LossSpec loss(LossKind::poisson);
  const FitProblem p = FitProblem::dense(oracle::random_data(loss, dims, rng), loss, 3);
  OptOptions o;
  o.max_iters = 30;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const MultiStartResult ms = fit_gcp_multistart(p, seeds, o);
  REQUIRE(ms.runs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ms.runs[i].seed == seeds[i]);
    CHECK(ms.runs[ms.best].value <= ms.runs[i].value);
  }
  CHECK_THROWS_AS(fit_gcp_multistart(p, {}, o), DomainError);
}

TEST_CASE("fit rejects mismatched initial models") {
  const FitProblem p =
      FitProblem::dense(DenseTensor(Shape{3, 3}), LossSpec(LossKind::gaussian), 2);
  CHECK_THROWS_AS(fit_gcp(p, KruskalTensor({Matrix::Ones(3, 1), Matrix::Ones(3, 1)}), {}),
                  ShapeError);
}

TEST_CASE("progress continues while F changes only at rounding level") {
  // A large constant offset hides the final decreases in F's last bits;
  // the gradient still resolves the minimizer.
  const std::vector<double> c{0.3, -1.2, 2.5, 0.7};
  const std::vector<double> d{1.0, 3.0, 7.0, 2.0};
  const Oracle f = [&](std::span<const double> x, std::span<double> g) {
    double v = 1e8;
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = d[i] * (x[i] - c[i]);
      v += 0.5 * d[i] * (x[i] - c[i]) * (x[i] - c[i]);
    }
    return v;
  };
  OptOptions o;
  o.grad_tol = 1e-9;
  o.rel_f_tol = 1e-15;
  const MinimizeResult r = minimize(f, std::vector<double>(4, 0.0), Bounds::unbounded(4), o);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(r.x[i] == doctest::Approx(c[i]).epsilon(1e-6));
  CHECK(r.trace.status != OptStatus::line_search_failure);
  check_trace(r.trace);
}
