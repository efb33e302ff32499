//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/kruskal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

namespace {
  void check_factors(const std::vector<Matrix> &factors) {
    if (factors.empty())
      throw ShapeError("Kruskal tensor needs at least one factor");
    const Eigen::Index r = factors.front().cols();
    if (r < 1)
      throw ShapeError("Kruskal tensor rank must be at least 1");
    for (const Matrix &a : factors) {
      if (a.cols() != r)
        throw ShapeError("factor matrices disagree on the rank");
      if (a.rows() < 1)
        throw ShapeError("factor matrix with zero rows");
    }
  }
}  // namespace

KruskalTensor::KruskalTensor(std::vector<Matrix> factors)
    : factors_(std::move(factors)) {
  check_factors(factors_);
}

KruskalTensor::KruskalTensor(std::vector<Matrix> factors, Vector weights)
    : factors_(std::move(factors)), weights_(std::move(weights)) {
  check_factors(factors_);
  if (weights_->size() != factors_.front().cols())
    throw ShapeError("weight vector length differs from the rank");
  for (Eigen::Index j = 0; j < weights_->size(); ++j)
    if (!std::isfinite((*weights_)(j)) || (*weights_)(j) < 0.0)
      throw ShapeError("weights must be finite and nonnegative");
}

Shape KruskalTensor::shape() const {
  std::vector<std::size_t> dims(factors_.size());
  for (std::size_t k = 0; k < factors_.size(); ++k)
    dims[k] = static_cast<std::size_t>(factors_[k].rows());
  return Shape(std::move(dims));
}

Vector KruskalTensor::weights() const {
  if (weights_)
    return *weights_;
  return Vector::Ones(static_cast<Eigen::Index>(rank()));
}

KruskalTensor KruskalTensor::absorb_weights() const {
  std::vector<Matrix> f = factors_;
  if (weights_)
    f.front() = f.front() * weights_->asDiagonal();
  return KruskalTensor(std::move(f));
}

double entry(const KruskalTensor &m, MultiIndexView idx) {
  const Shape s = m.shape();
  if (!s.contains(idx))
    throw RangeError("multiindex out of range");
  const Vector w = m.weights();
  double sum = 0.0;
  for (std::size_t j = 0; j < m.rank(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    double prod = w(jj);
    for (std::size_t k = 0; k < m.order(); ++k)
      prod *= m.factor(k)(static_cast<Eigen::Index>(idx[k]), jj);
    sum += prod;
  }
  return sum;
}

Matrix khatri_rao_except(const KruskalTensor &m, std::size_t k) {
  const std::size_t d = m.order();
  if (k >= d)
    throw ModeError("mode " + std::to_string(k) + " out of range for order "
                    + std::to_string(d));
  Matrix z = Matrix::Ones(1, static_cast<Eigen::Index>(m.rank()));
  for (std::size_t q = d; q-- > 0;)
    if (q != k)
      z = khatri_rao(z, m.factor(q));
  return z;
}

Matrix model_unfold(const KruskalTensor &m, std::size_t k) {
  const Matrix z = khatri_rao_except(m, k);
  return m.factor(k) * m.weights().asDiagonal() * z.transpose();
}

DenseTensor full(const KruskalTensor &m, std::size_t budget) {
  const Shape s = m.shape();
  if (s.total() > budget)
    throw CapacityError("full model has " + std::to_string(s.total())
                        + " entries, over the budget of "
                        + std::to_string(budget));
  // Column-major M_(0) is vec(M) in linear-index order.
  const Matrix m0 = model_unfold(m, 0);
  return DenseTensor(s, std::vector<double>(m0.data(), m0.data() + m0.size()));
}

KruskalTensor normalize(const KruskalTensor &m,
                        std::vector<std::size_t> *zero_components) {
  const std::size_t d = m.order();
  const auto r = static_cast<Eigen::Index>(m.rank());
  std::vector<Matrix> f = m.factors();
  Vector lambda = m.weights();
  std::vector<bool> degenerate(static_cast<std::size_t>(r), false);

  for (Eigen::Index j = 0; j < r; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const double nrm = f[k].col(j).norm();
      if (nrm > 0.0) {
        f[k].col(j) /= nrm;
        lambda(j) *= nrm;
      } else {
        degenerate[static_cast<std::size_t>(j)] = true;
      }
    }
    if (degenerate[static_cast<std::size_t>(j)])
      lambda(j) = 0.0;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const Matrix &first = f.front();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     if (lambda(a) != lambda(b))
                       return lambda(a) > lambda(b);
                     return std::lexicographical_compare(
                         first.col(a).begin(), first.col(a).end(),
                         first.col(b).begin(), first.col(b).end());
                   });

  std::vector<Matrix> sorted(d);
  Vector sorted_lambda(r);
  for (std::size_t k = 0; k < d; ++k) {
    sorted[k].resize(f[k].rows(), r);
    for (Eigen::Index j = 0; j < r; ++j)
      sorted[k].col(j) = f[k].col(order[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    sorted_lambda(j) = lambda(src);
    if (zero_components && degenerate[static_cast<std::size_t>(src)])
      zero_components->push_back(static_cast<std::size_t>(j));
  }
  return KruskalTensor(std::move(sorted), std::move(sorted_lambda));
}

std::size_t parameter_count(const Shape &shape, std::size_t rank,
                            bool with_weights) {
  std::size_t rows = 0;
  for (std::size_t n : shape.dims())
    rows += n;
  return rank * rows + (with_weights ? rank : 0);
}

std::vector<double> kt2vec(const KruskalTensor &m) {
  std::vector<double> v;
  v.reserve(parameter_count(m.shape(), m.rank(), m.has_weights()));
  for (const Matrix &a : m.factors())
    v.insert(v.end(), a.data(), a.data() + a.size());
  if (m.has_weights()) {
    const Vector w = m.weights();
    v.insert(v.end(), w.data(), w.data() + w.size());
  }
  return v;
}

KruskalTensor vec2kt(std::span<const double> v, const Shape &shape,
                     std::size_t rank, bool has_weights) {
  if (rank < 1)
    throw ShapeError("rank must be at least 1");
  const std::size_t expected = parameter_count(shape, rank, has_weights);
  if (v.size() != expected)
    throw ShapeError("parameter vector has length " + std::to_string(v.size())
                     + ", expected " + std::to_string(expected));
  const auto r = static_cast<Eigen::Index>(rank);
  std::vector<Matrix> factors;
  factors.reserve(shape.order());
  std::size_t offset = 0;
  for (std::size_t n : shape.dims()) {
    const auto rows = static_cast<Eigen::Index>(n);
    factors.emplace_back(Eigen::Map<const Matrix>(v.data() + offset, rows, r));
    offset += n * rank;
  }
  if (has_weights)
    return KruskalTensor(std::move(factors),
                         Eigen::Map<const Vector>(v.data() + offset, r));
  return KruskalTensor(std::move(factors));
}

}  // namespace gcp
