//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

Shape::Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty())
    throw ShapeError("tensor order must be at least 1");

  strides_.resize(dims_.size());
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (dims_[k] == 0)
      throw ShapeError("mode " + std::to_string(k) + " has size 0");
    strides_[k] = total;
    if (total > std::numeric_limits<std::size_t>::max() / dims_[k])
      throw CapacityError("tensor size overflows the index type");
    total *= dims_[k];
  }
  total_ = total;
}

double Shape::geometric_mean() const {
  double log_sum = 0.0;
  for (std::size_t n : dims_)
    log_sum += std::log(static_cast<double>(n));
  return std::exp(log_sum / static_cast<double>(dims_.size()));
}

double Shape::arithmetic_mean() const {
  double sum = 0.0;
  for (std::size_t n : dims_)
    sum += static_cast<double>(n);
  return sum / static_cast<double>(dims_.size());
}

bool Shape::contains(MultiIndexView idx) const noexcept {
  if (idx.size() != dims_.size())
    return false;
  for (std::size_t k = 0; k < dims_.size(); ++k)
    if (idx[k] >= dims_[k])
      return false;
  return true;
}

void Shape::check_mode(std::size_t k) const {
  if (k >= dims_.size())
    throw ModeError("mode " + std::to_string(k) + " out of range for order "
                    + std::to_string(dims_.size()));
}

std::size_t linear_index(const Shape &shape, MultiIndexView idx) {
  if (!shape.contains(idx))
    throw RangeError("multiindex out of range");
  std::size_t lin = 0;
  for (std::size_t k = 0; k < idx.size(); ++k)
    lin += idx[k] * shape.stride(k);
  return lin;
}

MultiIndex multi_index(const Shape &shape, std::size_t linear) {
  if (linear >= shape.total())
    throw RangeError("linear index out of range");
  MultiIndex idx(shape.order());
  for (std::size_t k = 0; k < shape.order(); ++k) {
    idx[k] = linear % shape.dim(k);
    linear /= shape.dim(k);
  }
  return idx;
}

std::pair<std::size_t, std::size_t>
unfold_index(const Shape &shape, std::size_t k, MultiIndexView idx) {
  shape.check_mode(k);
  if (!shape.contains(idx))
    throw RangeError("multiindex out of range");
  std::size_t col = 0;
  for (std::size_t l = 0; l < k; ++l)
    col += idx[l] * shape.stride(l);
  for (std::size_t l = k + 1; l < shape.order(); ++l)
    col += idx[l] * (shape.stride(l) / shape.dim(k));
  return {idx[k], col};
}

bool next_index(const Shape &shape, MultiIndex &idx) noexcept {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (++idx[k] < shape.dim(k))
      return true;
    idx[k] = 0;
  }
  return false;
}

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), values_(shape_.total(), 0.0) {}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != shape_.total())
    throw ShapeError("dense tensor needs " + std::to_string(shape_.total())
                     + " values, got " + std::to_string(values_.size()));
}

CooTensor::CooTensor(Shape shape) : shape_(std::move(shape)) {}

CooTensor::CooTensor(Shape shape, std::vector<std::size_t> subscripts,
                     std::vector<double> values)
    : shape_(std::move(shape)), subs_(std::move(subscripts)),
      values_(std::move(values)) {
  const std::size_t d = shape_.order();
  if (subs_.size() != values_.size() * d)
    throw ShapeError("coordinate list needs " + std::to_string(d)
                     + " subscripts per value");
  for (std::size_t e = 0; e < values_.size(); ++e)
    if (!shape_.contains(index(e)))
      throw RangeError("coordinate entry " + std::to_string(e)
                       + " is out of range");

  auto lin = linear_indices();
  std::sort(lin.begin(), lin.end());
  if (std::adjacent_find(lin.begin(), lin.end()) != lin.end())
    throw ShapeError("coordinate list contains a duplicate index");
}

CooTensor CooTensor::with_pattern(const CooTensor &pattern,
                                  std::vector<double> values) {
  if (values.size() != pattern.nnz())
    throw ShapeError("value count differs from the pattern's entry count");
  CooTensor out(pattern.shape_);
  out.subs_ = pattern.subs_;
  out.values_ = std::move(values);
  return out;
}

std::vector<std::size_t> CooTensor::linear_indices() const {
  std::vector<std::size_t> lin(nnz());
  const std::size_t d = shape_.order();
  for (std::size_t e = 0; e < nnz(); ++e) {
    std::size_t l = 0;
    for (std::size_t k = 0; k < d; ++k)
      l += subs_[e * d + k] * shape_.stride(k);
    lin[e] = l;
  }
  return lin;
}

DenseTensor to_dense(const CooTensor &t) {
  if (t.shape().total() > kDenseElementBudget)
    throw CapacityError("dense conversion exceeds the element budget");
  DenseTensor out(t.shape());
  const auto lin = t.linear_indices();
  for (std::size_t e = 0; e < t.nnz(); ++e)
    out[lin[e]] = t.value(e);
  return out;
}

// The tensor is viewed as (left, n_k, right) with left = prod_{l<k} n_l.
// Column c = a + left * b of the unfolding is contiguous in `a`.
Matrix unfold(const DenseTensor &t, std::size_t k) {
  const Shape &s = t.shape();
  s.check_mode(k);
  const std::size_t nk = s.dim(k);
  const std::size_t left = s.stride(k);
  const std::size_t right = s.total() / (left * nk);
  Matrix out(static_cast<Eigen::Index>(nk),
             static_cast<Eigen::Index>(left * right));
  const double *v = t.values().data();
  for (std::size_t b = 0; b < right; ++b)
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t a = 0; a < left; ++a)
        out(static_cast<Eigen::Index>(i),
            static_cast<Eigen::Index>(a + left * b)) =
            v[a + left * (i + nk * b)];
  return out;
}

DenseTensor fold(const Matrix &m, std::size_t k, const Shape &shape) {
  shape.check_mode(k);
  const std::size_t nk = shape.dim(k);
  const std::size_t left = shape.stride(k);
  const std::size_t right = shape.total() / (left * nk);
  if (static_cast<std::size_t>(m.rows()) != nk
      || static_cast<std::size_t>(m.cols()) != left * right)
    throw ShapeError("matrix size does not match the mode unfolding");
  DenseTensor out(shape);
  for (std::size_t b = 0; b < right; ++b)
    for (std::size_t i = 0; i < nk; ++i)
      for (std::size_t a = 0; a < left; ++a)
        out[a + left * (i + nk * b)] =
            m(static_cast<Eigen::Index>(i),
              static_cast<Eigen::Index>(a + left * b));
  return out;
}

Matrix khatri_rao(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.cols())
    throw ShapeError("Khatri-Rao operands need the same column count");
  Matrix out(a.rows() * b.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      out.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
  return out;
}

Matrix khatri_rao(std::span<const Matrix> mats) {
  if (mats.empty())
    throw ShapeError("Khatri-Rao product of an empty list");
  Matrix out = mats.front();
  for (std::size_t q = 1; q < mats.size(); ++q)
    out = khatri_rao(out, mats[q]);
  return out;
}

Matrix hadamard(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("Hadamard operands need the same shape");
  return a.cwiseProduct(b);
}

}  // namespace gcp
