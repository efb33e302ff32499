//
// GCP - generalized canonical polyadic tensor decomposition
// SPDX-License-Identifier: Apache-2.0
//

#include "gcp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gcp/error.hpp"

namespace gcp {

namespace {
  constexpr double kInf = std::numeric_limits<double>::infinity();

  void sort_unique_checked(const Shape &shape,
                           std::vector<std::size_t> &index,
                           std::vector<double> *weight) {
    for (std::size_t l : index)
      if (l >= shape.total())
        throw RangeError("weight index " + std::to_string(l)
                         + " out of range");
    std::vector<std::size_t> perm(index.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
      return index[a] < index[b];
    });
    std::vector<std::size_t> sorted(index.size());
    for (std::size_t q = 0; q < perm.size(); ++q)
      sorted[q] = index[perm[q]];
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ShapeError("weight tensor lists an index twice");
    if (weight) {
      std::vector<double> w(weight->size());
      for (std::size_t q = 0; q < perm.size(); ++q)
        w[q] = (*weight)[perm[q]];
      *weight = std::move(w);
    }
    index = std::move(sorted);
  }

  Matrix left_khatri_rao(const KruskalTensor &m, std::size_t k) {
    Matrix z = Matrix::Ones(1, static_cast<Eigen::Index>(m.rank()));
    for (std::size_t q = k; q-- > 0;)
      z = khatri_rao(z, m.factor(q));
    return z;
  }

  Matrix right_khatri_rao(const KruskalTensor &m, std::size_t k) {
    Matrix z = Matrix::Ones(1, static_cast<Eigen::Index>(m.rank()));
    for (std::size_t q = m.order(); q-- > k + 1;)
      z = khatri_rao(z, m.factor(q));
    return z;
  }

  void check_shape(const Shape &data, const KruskalTensor &m) {
    if (!(m.shape() == data))
      throw ShapeError("model shape does not match the tensor shape");
  }

  double regularization_term(const FitProblem &p, const KruskalTensor &m) {
    double reg = 0.0;
    for (std::size_t k = 0; k < m.order(); ++k)
      if (p.regularization()[k] != 0.0)
        reg += 0.5 * p.regularization()[k] * m.factor(k).squaredNorm();
    return reg;
  }

  Matrix mttkrp_any(const DerivativeTensor &y, const KruskalTensor &m,
                    std::size_t k) {
    return std::visit([&](const auto &t) { return mttkrp(t, m, k); }, y);
  }
}  // namespace

// --- WeightTensor -----------------------------------------------------------

WeightTensor WeightTensor::uniform(const Shape &shape) {
  return WeightTensor(Kind::uniform, shape);
}

WeightTensor WeightTensor::mask(const Shape &shape,
                                std::vector<std::size_t> observed) {
  WeightTensor w(Kind::mask, shape);
  sort_unique_checked(shape, observed, nullptr);
  w.index_ = std::move(observed);
  const double each = w.index_.empty()
                          ? 0.0
                          : 1.0 / static_cast<double>(w.index_.size());
  w.weight_.assign(w.index_.size(), each);
  return w;
}

WeightTensor WeightTensor::mask(const CooTensor &pattern) {
  return mask(pattern.shape(), pattern.linear_indices());
}

WeightTensor WeightTensor::general(const Shape &shape,
                                   std::vector<std::size_t> indices,
                                   std::vector<double> weights) {
  if (indices.size() != weights.size())
    throw ShapeError("weight tensor needs one weight per index");
  for (double v : weights)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("weights must be finite and nonnegative");
  WeightTensor w(Kind::general, shape);
  sort_unique_checked(shape, indices, &weights);
  w.index_ = std::move(indices);
  w.weight_ = std::move(weights);
  return w;
}

std::size_t WeightTensor::count() const noexcept {
  return kind_ == Kind::uniform ? shape_.total() : index_.size();
}

double WeightTensor::sum() const noexcept {
  if (kind_ == Kind::uniform)
    return 1.0;
  double s = 0.0;
  for (double v : weight_)
    s += v;
  return s;
}

// --- FitProblem -------------------------------------------------------------

FitProblem::FitProblem(std::variant<DenseTensor, CooTensor> data,
                       DataLayout layout, WeightTensor weights, LossSpec loss,
                       std::size_t rank)
    : data_(std::move(data)), layout_(layout),
      shape_(std::visit([](const auto &t) { return t.shape(); }, data_)),
      weights_(std::move(weights)), loss_(loss), rank_(rank) {
  if (rank_ < 1)
    throw ShapeError("rank must be at least 1");
  if (!(weights_.shape() == shape_))
    throw ShapeError("weight tensor shape does not match the data");
  eta_.assign(shape_.order(), 0.0);
  lower_.assign(shape_.order(), loss_.bounded() ? 0.0 : -kInf);
}

FitProblem FitProblem::dense(DenseTensor data, LossSpec loss, std::size_t rank,
                             std::optional<WeightTensor> weights) {
  WeightTensor w =
      weights ? std::move(*weights) : WeightTensor::uniform(data.shape());
  FitProblem p(std::move(data), DataLayout::dense, std::move(w), loss, rank);
  p.validate_data();
  return p;
}

FitProblem FitProblem::sparse(CooTensor data, LossSpec loss,
                              std::size_t rank) {
  const Shape shape = data.shape();
  FitProblem p(std::move(data), DataLayout::sparse,
               WeightTensor::uniform(shape), loss, rank);
  const CooTensor &x = p.coo_data();
  const auto lin = x.linear_indices();
  p.sorted_entry_.resize(lin.size());
  std::iota(p.sorted_entry_.begin(), p.sorted_entry_.end(), std::size_t{0});
  std::sort(p.sorted_entry_.begin(), p.sorted_entry_.end(),
            [&](std::size_t a, std::size_t b) { return lin[a] < lin[b]; });
  p.sorted_linear_.resize(lin.size());
  for (std::size_t q = 0; q < lin.size(); ++q)
    p.sorted_linear_[q] = lin[p.sorted_entry_[q]];
  p.validate_data();
  return p;
}

FitProblem FitProblem::scarce(CooTensor data, LossSpec loss, std::size_t rank,
                              std::optional<std::vector<double>> weights) {
  const Shape shape = data.shape();
  const auto lin = data.linear_indices();
  std::vector<double> entry_weight;
  WeightTensor w = WeightTensor::uniform(shape);
  if (weights) {
    if (weights->size() != data.nnz())
      throw ShapeError("scarce data needs one weight per entry");
    entry_weight = *weights;
    w = WeightTensor::general(shape, lin, std::move(*weights));
  } else {
    if (data.nnz() == 0)
      throw ShapeError("scarce data has no observed entries");
    w = WeightTensor::mask(shape, lin);
    entry_weight.assign(data.nnz(),
                        1.0 / static_cast<double>(data.nnz()));
  }
  FitProblem p(std::move(data), DataLayout::scarce, std::move(w), loss, rank);
  p.entry_weight_ = std::move(entry_weight);
  p.validate_data();
  return p;
}

FitProblem &FitProblem::set_regularization(std::vector<double> eta) {
  if (eta.size() == 1)
    eta.assign(shape_.order(), eta.front());
  if (eta.size() != shape_.order())
    throw ShapeError("regularization needs one value or one per mode");
  for (double v : eta)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw DomainError("regularization weights must be nonnegative");
  eta_ = std::move(eta);
  return *this;
}

FitProblem &FitProblem::set_lower_bounds(std::vector<double> bounds) {
  if (bounds.size() == 1)
    bounds.assign(shape_.order(), bounds.front());
  if (bounds.size() != shape_.order())
    throw ShapeError("lower bounds need one value or one per mode");
  for (double b : bounds) {
    if (b != 0.0 && b != -kInf)
      throw DomainError("factor lower bounds must be 0 or -infinity");
    if (loss_.bounded() && b != 0.0)
      throw ContractError("loss " + std::string(loss_.name())
                          + " needs nonnegative factors in every mode");
  }
  lower_ = std::move(bounds);
  return *this;
}

FitProblem &FitProblem::set_dense_budget(std::size_t budget) {
  budget_ = budget;
  return *this;
}

std::size_t FitProblem::observed_count() const noexcept {
  switch (layout_) {
  case DataLayout::dense:
    return weights_.count();
  case DataLayout::sparse:
    return shape_.total();
  case DataLayout::scarce:
    return std::get<CooTensor>(data_).nnz();
  }
  return 0;
}

const DenseTensor &FitProblem::dense_data() const {
  if (const auto *t = std::get_if<DenseTensor>(&data_))
    return *t;
  throw ContractError("problem data is not dense");
}

const CooTensor &FitProblem::coo_data() const {
  if (const auto *t = std::get_if<CooTensor>(&data_))
    return *t;
  throw ContractError("problem data is not a coordinate list");
}

void FitProblem::validate_data() const {
  auto check = [&](double x, std::size_t where) {
    if (!loss_.in_domain(x))
      throw DomainError("data value " + std::to_string(x) + " at linear index "
                        + std::to_string(where) + " is outside the "
                        + std::string(loss_.name()) + " domain of "
                        + std::string(loss_.domain_description()));
  };

  if (layout_ == DataLayout::dense) {
    const DenseTensor &x = dense_data();
    if (weights_.kind() == WeightTensor::Kind::uniform) {
      for (std::size_t i = 0; i < x.size(); ++i)
        check(x[i], i);
    } else {
      const auto idx = weights_.indices();
      const auto w = weights_.weights();
      for (std::size_t q = 0; q < idx.size(); ++q)
        if (w[q] > 0.0)
          check(x[idx[q]], idx[q]);
    }
    return;
  }

  const CooTensor &x = coo_data();
  const auto lin = x.linear_indices();
  for (std::size_t e = 0; e < x.nnz(); ++e)
    if (layout_ == DataLayout::sparse || entry_weight_[e] > 0.0)
      check(x.value(e), lin[e]);
  if (layout_ == DataLayout::sparse && x.nnz() < shape_.total()
      && !loss_.in_domain(0.0))
    throw DomainError("implicit zeros of sparse data are outside the "
                      + std::string(loss_.name()) + " domain of "
                      + std::string(loss_.domain_description()));
}

void FitProblem::check_model(const KruskalTensor &m) const {
  check_shape(shape_, m);
  if (m.rank() != rank_)
    throw ShapeError("model rank " + std::to_string(m.rank())
                     + " differs from the problem rank "
                     + std::to_string(rank_));
  for (std::size_t k = 0; k < m.order(); ++k) {
    if (lower_[k] == -kInf)
      continue;
    const double lowest = m.factor(k).minCoeff();
    if (!(lowest >= lower_[k]))
      throw FeasibilityError("factor " + std::to_string(k)
                             + " has an entry below its lower bound");
  }
}

// --- MTTKRP -----------------------------------------------------------------

// Y is viewed as (left, n_k, right). For every right index b the slab
// Y(:, :, b) is a contiguous left x n_k block, so
//   G += (slab^T * KL) .* KR(b, :)
// with KL = A_{k-1} (.) ... (.) A_0 and KR = A_{d-1} (.) ... (.) A_{k+1}.
Matrix mttkrp(const DenseTensor &y, const KruskalTensor &m, std::size_t k) {
  const Shape &s = y.shape();
  s.check_mode(k);
  check_shape(s, m);
  const auto nk = static_cast<Eigen::Index>(s.dim(k));
  const auto left = static_cast<Eigen::Index>(s.stride(k));
  const Eigen::Index right =
      static_cast<Eigen::Index>(s.total()) / (left * nk);
  const Matrix kl = left_khatri_rao(m, k);
  const Matrix kr = right_khatri_rao(m, k);

  Matrix g = Matrix::Zero(nk, static_cast<Eigen::Index>(m.rank()));
  const double *data = y.values().data();
  for (Eigen::Index b = 0; b < right; ++b) {
    Eigen::Map<const Matrix> slab(data + left * nk * b, left, nk);
    g.array() += (slab.transpose() * kl).array().rowwise()
                 * kr.row(b).array();
  }
  return g;
}

Matrix mttkrp(const CooTensor &y, const KruskalTensor &m, std::size_t k) {
  const Shape &s = y.shape();
  s.check_mode(k);
  check_shape(s, m);
  const std::size_t d = s.order();
  const auto r = static_cast<Eigen::Index>(m.rank());
  Matrix g = Matrix::Zero(static_cast<Eigen::Index>(s.dim(k)), r);
  Eigen::RowVectorXd row(r);
  for (std::size_t e = 0; e < y.nnz(); ++e) {
    const auto idx = y.index(e);
    row.setConstant(y.value(e));
    for (std::size_t q = 0; q < d; ++q)
      if (q != k)
        row.array() *=
            m.factor(q).row(static_cast<Eigen::Index>(idx[q])).array();
    g.row(static_cast<Eigen::Index>(idx[k])) += row;
  }
  return g;
}

std::vector<double> model_entries_at(const KruskalTensor &m,
                                     std::span<const std::size_t> subscripts) {
  const Shape s = m.shape();
  const std::size_t d = s.order();
  if (subscripts.size() % d != 0)
    throw ShapeError("subscript list length is not a multiple of the order");
  const std::size_t count = subscripts.size() / d;
  const Eigen::RowVectorXd lambda = m.weights().transpose();
  std::vector<double> out(count);
  Eigen::RowVectorXd row(lambda.size());
  for (std::size_t e = 0; e < count; ++e) {
    const MultiIndexView idx = subscripts.subspan(e * d, d);
    if (!s.contains(idx))
      throw RangeError("multiindex out of range");
    row = lambda;
    for (std::size_t q = 0; q < d; ++q)
      row.array() *= m.factor(q).row(static_cast<Eigen::Index>(idx[q])).array();
    out[e] = row.sum();
  }
  return out;
}

std::vector<double>
model_entries_at_linear(const KruskalTensor &m,
                        std::span<const std::size_t> linear) {
  const Shape s = m.shape();
  const std::size_t d = s.order();
  std::vector<std::size_t> subs(linear.size() * d);
  for (std::size_t e = 0; e < linear.size(); ++e) {
    if (linear[e] >= s.total())
      throw RangeError("linear index out of range");
    std::size_t rem = linear[e];
    for (std::size_t q = 0; q < d; ++q) {
      subs[e * d + q] = rem % s.dim(q);
      rem /= s.dim(q);
    }
  }
  return model_entries_at(m, subs);
}

// --- objective and gradient -------------------------------------------------

DerivativeResult elementwise_derivative(const FitProblem &p,
                                        const KruskalTensor &m) {
  p.check_model(m);
  const LossSpec &loss = p.loss();
  const Shape &shape = p.shape();
  const std::size_t total = shape.total();

  // Full model when most entries are observed, entry-wise otherwise.
  auto model_at = [&](std::span<const std::size_t> linear) {
    if (2 * linear.size() > total && total <= p.dense_budget()) {
      const DenseTensor full_model = full(m, p.dense_budget());
      std::vector<double> out(linear.size());
      for (std::size_t q = 0; q < linear.size(); ++q)
        out[q] = full_model[linear[q]];
      return out;
    }
    return model_entries_at_linear(m, linear);
  };

  if (p.layout() == DataLayout::scarce) {
    const CooTensor &x = p.coo_data();
    const auto lin = x.linear_indices();
    const std::vector<double> mv = model_at(lin);
    std::vector<double> yv(x.nnz(), 0.0);
    double f = 0.0;
    for (std::size_t e = 0; e < x.nnz(); ++e) {
      const double w = p.entry_weight_[e];
      if (w == 0.0)
        continue;
      f += w * loss.value(x.value(e), mv[e]);
      yv[e] = w * loss.deriv(x.value(e), mv[e]);
    }
    return {f, CooTensor::with_pattern(x, std::move(yv))};
  }

  if (total > p.dense_budget())
    throw CapacityError("dense derivative tensor has " + std::to_string(total)
                        + " entries, over the budget of "
                        + std::to_string(p.dense_budget()));
  DenseTensor y(shape);
  double f = 0.0;

  if (p.layout() == DataLayout::sparse) {
    const CooTensor &x = p.coo_data();
    const DenseTensor mv = full(m, p.dense_budget());
    const double w = p.weights().uniform_weight();
    std::size_t next = 0;
    for (std::size_t i = 0; i < total; ++i) {
      double xi = 0.0;
      if (next < p.sorted_linear_.size() && p.sorted_linear_[next] == i)
        xi = x.value(p.sorted_entry_[next++]);
      f += w * loss.value(xi, mv[i]);
      y[i] = w * loss.deriv(xi, mv[i]);
    }
    return {f, std::move(y)};
  }

  const DenseTensor &x = p.dense_data();
  const WeightTensor &wt = p.weights();
  if (wt.kind() == WeightTensor::Kind::uniform) {
    const DenseTensor mv = full(m, p.dense_budget());
    const double w = wt.uniform_weight();
    for (std::size_t i = 0; i < total; ++i) {
      f += w * loss.value(x[i], mv[i]);
      y[i] = w * loss.deriv(x[i], mv[i]);
    }
    return {f, std::move(y)};
  }

  const auto idx = wt.indices();
  const auto wv = wt.weights();
  const std::vector<double> mv = model_at(idx);
  for (std::size_t q = 0; q < idx.size(); ++q) {
    if (wv[q] == 0.0)
      continue;
    const double xi = x[idx[q]];
    f += wv[q] * loss.value(xi, mv[q]);
    y[idx[q]] = wv[q] * loss.deriv(xi, mv[q]);
  }
  return {f, std::move(y)};
}

Gradient gcp_fg(const FitProblem &p, const KruskalTensor &m) {
  DerivativeResult dr = elementwise_derivative(p, m);
  Gradient out;
  out.value = dr.loss + regularization_term(p, m);
  out.factor_grads.reserve(m.order());
  for (std::size_t k = 0; k < m.order(); ++k) {
    Matrix g = mttkrp_any(dr.y, m, k);
    if (m.has_weights())
      g = g * m.weights().asDiagonal();
    if (p.regularization()[k] != 0.0)
      g += p.regularization()[k] * m.factor(k);
    out.factor_grads.push_back(std::move(g));
  }
  return out;
}

WeightedGradient gcp_fg_weighted_lambda(const FitProblem &p,
                                        const KruskalTensor &m) {
  if (!m.has_weights())
    throw ContractError("weighted gradient needs a model with weights");
  DerivativeResult dr = elementwise_derivative(p, m);
  const Vector lambda = m.weights();
  WeightedGradient out;
  out.value = dr.loss + regularization_term(p, m);
  out.factor_grads.reserve(m.order());
  for (std::size_t k = 0; k < m.order(); ++k) {
    const Matrix g = mttkrp_any(dr.y, m, k);
    // Z^T vec(Y) equals the column sums of A_k .* (Y_(k) Z_k) for any k.
    if (k == 0)
      out.weight_grad = m.factor(0).cwiseProduct(g).colwise().sum().transpose();
    Matrix gk = g * lambda.asDiagonal();
    if (p.regularization()[k] != 0.0)
      gk += p.regularization()[k] * m.factor(k);
    out.factor_grads.push_back(std::move(gk));
  }
  return out;
}

Gradient gaussian_fast_fg(const FitProblem &p, const KruskalTensor &m) {
  if (p.loss().kind() != LossKind::gaussian)
    throw ContractError("fast gradient path requires the gaussian loss");
  if (p.layout() == DataLayout::scarce
      || p.weights().kind() != WeightTensor::Kind::uniform)
    throw ContractError("fast gradient path requires fully observed data");
  p.check_model(m);

  const std::size_t d = m.order();
  const auto r = static_cast<Eigen::Index>(m.rank());
  const double scale = 2.0 / static_cast<double>(p.shape().total());
  const Vector lambda = m.weights();

  std::vector<Matrix> gram(d);
  for (std::size_t k = 0; k < d; ++k)
    gram[k] = m.factor(k).transpose() * m.factor(k);

  double x_norm2 = 0.0;
  auto data_mttkrp = [&](std::size_t k) -> Matrix {
    if (p.layout() == DataLayout::dense)
      return mttkrp(p.dense_data(), m, k);
    return mttkrp(p.coo_data(), m, k);
  };
  if (p.layout() == DataLayout::dense) {
    for (double v : p.dense_data().values())
      x_norm2 += v * v;
  } else {
    for (double v : p.coo_data().values())
      x_norm2 += v * v;
  }

  Gradient out;
  out.factor_grads.reserve(d);
  double inner = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    Matrix gamma = Matrix::Ones(r, r);
    for (std::size_t q = 0; q < d; ++q)
      if (q != k)
        gamma.array() *= gram[q].array();
    const Matrix xz = data_mttkrp(k);
    if (k + 1 == d)
      inner = (m.factor(k).cwiseProduct(xz).colwise().sum().transpose())
                  .dot(lambda);
    Matrix g = scale
               * (-xz * lambda.asDiagonal()
                  + m.factor(k) * lambda.asDiagonal() * gamma
                        * lambda.asDiagonal());
    if (p.regularization()[k] != 0.0)
      g += p.regularization()[k] * m.factor(k);
    out.factor_grads.push_back(std::move(g));
  }

  Matrix all = Matrix::Ones(r, r);
  for (std::size_t q = 0; q < d; ++q)
    all.array() *= gram[q].array();
  const double model_norm2 = lambda.dot(all * lambda);
  out.value = (x_norm2 - 2.0 * inner + model_norm2) * (scale / 2.0)
              + regularization_term(p, m);
  return out;
}

}  // namespace gcp
