// Copyright 2026 The QuadMech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Quadratic surrogate of the fine-tuning loss around a pretrained anchor θ*:
// per-datapoint gradients, Gauss-Newton matrices Jᵀ (∇²_f ℓ) J, their dataset
// means, and the resulting utility U = -(δᵀg + ½ δᵀ H_λ δ).
//
// The ridge term λ is folded into the stored Hessian, so a bundle always
// carries H_λ = H + λI. When a projection A (p x p̃, orthonormal columns) is
// present, the bundle lives in ξ-coordinates (θ = θ* + Aξ) and holds
// g_A = Aᵀg and H_{λ,A} = AᵀH A + λI.

#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/loss.hpp"
#include "quadmech/model.hpp"
#include "quadmech/parallel.hpp"

namespace quadmech {

inline constexpr std::size_t kMaxMaterializedParams = 2000;

struct CurvatureBundle {
  ParamVector anchor;
  Vector grad;
  SymMatrix hess;  // H_λ
  double lambda = 0.0;
  std::optional<Matrix> projection;
  std::size_t n = 0;

  // p̃ when projected, p otherwise.
  std::size_t dim() const noexcept { return grad.size(); }
  bool projected() const noexcept { return projection.has_value(); }

  // H without the ridge.
  SymMatrix gauss_newton() const { return hess.shifted(-lambda); }

  // θ-space point for a bundle-space point (identity shift in the full case).
  Vector lift(std::span<const double> point) const {
    require(point.size() == dim(), ErrorCode::DimensionMismatch, "lift");
    Vector theta(anchor.values().begin(), anchor.values().end());
    if (!projection) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = point[i];
      return theta;
    }
    const Matrix& a = *projection;
    for (std::size_t i = 0; i < a.rows(); ++i) theta[i] += dot(a.row(i), point);
    return theta;
  }
};

inline Vector per_point_gradient(Network& net, std::span<const double> theta,
                                 const LossKind& kind, std::span<const double> x,
                                 std::span<const double> y) {
  const auto f = net.forward(theta, x);
  const Vector w = loss_grad_f(kind, y, f);
  Vector g(net.param_count(), 0.0);
  net.backward(theta, w, g);
  return g;
}

inline Vector per_point_gradient(const ParamVector& anchor, const LossKind& kind,
                                 std::span<const double> x, std::span<const double> y) {
  Network net(anchor.spec());
  return per_point_gradient(net, anchor.values(), kind, x, y);
}

namespace detail {

// acc += Mᵀ C M for M (m x k) and symmetric C (m x m); upper triangle only.
inline void accumulate_gn(Matrix& acc, const Matrix& m, const SymMatrix& c) {
  const std::size_t rows = m.rows();
  const std::size_t k = m.cols();
  Matrix cm(rows, k);
  for (std::size_t a = 0; a < rows; ++a)
    for (std::size_t b = 0; b < rows; ++b)
      if (c(a, b) != 0.0) axpy(c(a, b), m.row(b), cm.row(a));
  for (std::size_t a = 0; a < rows; ++a) {
    const auto ma = m.row(a);
    const auto ca = cm.row(a);
    for (std::size_t i = 0; i < k; ++i) {
      const double mai = ma[i];
      if (mai == 0.0) continue;
      double* acc_i = acc.row(i).data();
      for (std::size_t j = i; j < k; ++j) acc_i[j] += mai * ca[j];
    }
  }
}

inline Matrix mirror_upper(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

}  // namespace detail

inline SymMatrix per_point_gn_hessian(const ParamVector& anchor, const LossKind& kind,
                                      std::span<const double> x,
                                      std::span<const double> y) {
  const std::size_t p = anchor.size();
  require(p <= kMaxMaterializedParams, ErrorCode::DimensionCap,
          "p = " + std::to_string(p) + " is too large to materialize; use a projection");
  Network net(anchor.spec());
  const Matrix j = jacobian(net, anchor.values(), x);
  const auto f = net.forward(anchor.values(), x);
  const SymMatrix c = loss_hess_f(kind, y, f);
  Matrix acc(p, p);
  detail::accumulate_gn(acc, j, c);
  return SymMatrix(detail::mirror_upper(std::move(acc)));
}

namespace detail {

struct CurvatureSums {
  Vector grad;
  Matrix hess;  // upper triangle
};

inline constexpr std::size_t kCurvatureBlock = 64;

}  // namespace detail

// Dataset mean gradient and Gauss-Newton matrix at the anchor, plus λI.
// With a projection the p x p matrix is never formed: J·A is assembled from
// p̃ forward-mode products per datapoint. Block sums are combined in a fixed
// pairwise tree, so the result does not depend on the worker count.
inline CurvatureBundle dataset_curvature(const ParamVector& anchor, const LossKind& kind,
                                         const LabeledDataset& data, double lambda,
                                         std::optional<Matrix> projection = std::nullopt) {
  require(!data.empty(), ErrorCode::EmptyDataset, "dataset_curvature on empty dataset");
  require(lambda >= 0.0, ErrorCode::InvalidInputs, "lambda must be >= 0");
  const std::size_t p = anchor.size();
  require(data.input_dim() == anchor.spec().input_dim &&
              data.output_dim() == anchor.spec().output_dim,
          ErrorCode::DimensionMismatch, "dataset dims do not match the model");
  std::optional<Matrix> projection_t;
  std::size_t dim = p;
  if (projection) {
    require(projection->rows() == p && projection->cols() >= 1 && projection->cols() <= p,
            ErrorCode::DimensionMismatch, "projection must be p x p̃ with 1 <= p̃ <= p");
    dim = projection->cols();
    projection_t = projection->transpose();
  } else {
    require(p <= kMaxMaterializedParams, ErrorCode::DimensionCap,
            "p = " + std::to_string(p) + " is too large to materialize; use a projection");
  }

  const std::size_t n = data.size();
  const std::size_t blocks = (n + detail::kCurvatureBlock - 1) / detail::kCurvatureBlock;
  std::vector<detail::CurvatureSums> partial(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Network net(anchor.spec());
    const auto theta = anchor.values();
    detail::CurvatureSums sums{Vector(p, 0.0), Matrix(dim, dim)};
    const std::size_t begin = b * detail::kCurvatureBlock;
    const std::size_t end = std::min(n, begin + detail::kCurvatureBlock);
    const std::size_t m = kind.m;
    Matrix ja(m, dim);
    for (std::size_t i = begin; i < end; ++i) {
      const auto f_span = net.forward(theta, data.x(i));
      const Vector f(f_span.begin(), f_span.end());
      const Vector w = loss_grad_f(kind, data.y(i), f);
      const SymMatrix c = loss_hess_f(kind, data.y(i), f);
      net.backward(theta, w, sums.grad);
      if (projection_t) {
        for (std::size_t k = 0; k < dim; ++k) {
          const auto col = net.tangent(theta, projection_t->row(k));
          for (std::size_t r = 0; r < m; ++r) ja(r, k) = col[r];
        }
        detail::accumulate_gn(sums.hess, ja, c);
      } else {
        const Matrix j = jacobian(net, theta, data.x(i));
        detail::accumulate_gn(sums.hess, j, c);
      }
    }
    partial[b] = std::move(sums);
  });

  detail::CurvatureSums total = pairwise_reduce(
      std::move(partial), [](detail::CurvatureSums a, detail::CurvatureSums b) {
        axpy(1.0, b.grad, a.grad);
        axpy(1.0, b.hess.data(), a.hess.data());
        return a;
      });

  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : total.grad) v *= inv_n;
  for (double& v : total.hess.data()) v *= inv_n;

  CurvatureBundle bundle;
  bundle.anchor = anchor;
  bundle.lambda = lambda;
  bundle.n = n;
  bundle.hess = SymMatrix(detail::mirror_upper(std::move(total.hess))).shifted(lambda);
  if (projection) {
    bundle.grad = matvec(*projection_t, total.grad);
    bundle.projection = std::move(projection);
  } else {
    bundle.grad = std::move(total.grad);
  }
  return bundle;
}

// U at a bundle-space point: θ (full) or ξ (projected).
inline double utility(const CurvatureBundle& bundle, std::span<const double> point) {
  require(point.size() == bundle.dim(), ErrorCode::DimensionMismatch,
          "utility point has length " + std::to_string(point.size()) + ", bundle dim " +
              std::to_string(bundle.dim()));
  Vector delta(point.begin(), point.end());
  if (!bundle.projected()) {
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= bundle.anchor.values()[i];
  }
  return -(dot(delta, bundle.grad) + 0.5 * bundle.hess.quadratic_form(delta));
}

// Mean loss L(D, θ).
inline double dataset_loss(const ModelSpec& spec, std::span<const double> theta,
                           const LossKind& kind, const LabeledDataset& data) {
  require(!data.empty(), ErrorCode::EmptyDataset, "dataset_loss on empty dataset");
  Network net(spec);
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    s += loss_value(kind, data.y(i), net.forward(theta, data.x(i)));
  return s / static_cast<double>(data.size());
}

// Fraction of rows whose argmax output matches the argmax target.
inline double dataset_accuracy(const ModelSpec& spec, std::span<const double> theta,
                               const LabeledDataset& data) {
  require(!data.empty(), ErrorCode::EmptyDataset, "dataset_accuracy on empty dataset");
  Network net(spec);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto f = net.forward(theta, data.x(i));
    const auto y = data.y(i);
    const auto fi = std::max_element(f.begin(), f.end()) - f.begin();
    const auto yi = std::max_element(y.begin(), y.end()) - y.begin();
    hits += (fi == yi);
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace quadmech
