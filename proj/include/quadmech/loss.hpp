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

// Mean-squared and softmax cross-entropy losses with closed-form derivatives
// with respect to the model output f.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"

namespace quadmech {

enum class LossType { MS, CE };

struct LossKind {
  LossType type = LossType::MS;
  std::size_t m = 1;

  static LossKind ms(std::size_t m) { return {LossType::MS, m}; }
  static LossKind ce(std::size_t m) {
    require(m >= 2, ErrorCode::InvalidInputs, "cross-entropy needs m >= 2");
    return {LossType::CE, m};
  }
};

inline std::string_view loss_name(LossType t) { return t == LossType::MS ? "ms" : "ce"; }

inline LossType parse_loss(std::string_view name) {
  if (name == "ms" || name == "mse") return LossType::MS;
  if (name == "ce") return LossType::CE;
  fail(ErrorCode::ConfigInvalid, "unknown loss '" + std::string(name) + "'");
}

inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

inline void check_dims(const LossKind& kind, std::span<const double> y,
                       std::span<const double> f) {
  require(y.size() == kind.m && f.size() == kind.m, ErrorCode::DimensionMismatch,
          "loss expects vectors of length " + std::to_string(kind.m));
  if (kind.type == LossType::CE) {
    require(kind.m >= 2, ErrorCode::InvalidInputs, "cross-entropy needs m >= 2");
    double sum = 0.0;
    for (double v : y) {
      require(v >= 0.0, ErrorCode::InvalidTarget, "negative target probability");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-8, ErrorCode::InvalidTarget,
            "target probabilities sum to " + std::to_string(sum));
  }
}

}  // namespace detail

// Max-subtracted softmax.
inline Vector softmax(std::span<const double> f) {
  const double mx = *std::max_element(f.begin(), f.end());
  Vector s(f.size());
  double z = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    s[i] = std::exp(f[i] - mx);
    z += s[i];
  }
  for (double& v : s) v /= z;
  return s;
}

inline double loss_value(const LossKind& kind, std::span<const double> y,
                         std::span<const double> f) {
  detail::check_dims(kind, y, f);
  if (kind.type == LossType::MS) {
    double s = 0.0;
    for (std::size_t i = 0; i < kind.m; ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
    return s / static_cast<double>(kind.m);
  }
  const Vector p = softmax(f);
  double s = 0.0;
  for (std::size_t i = 0; i < kind.m; ++i)
    if (y[i] != 0.0) s -= y[i] * std::log(std::max(p[i], kProbabilityFloor));
  return s;
}

inline Vector loss_grad_f(const LossKind& kind, std::span<const double> y,
                          std::span<const double> f) {
  detail::check_dims(kind, y, f);
  Vector g(kind.m);
  if (kind.type == LossType::MS) {
    const double c = 2.0 / static_cast<double>(kind.m);
    for (std::size_t i = 0; i < kind.m; ++i) g[i] = c * (f[i] - y[i]);
    return g;
  }
  const Vector p = softmax(f);
  for (std::size_t i = 0; i < kind.m; ++i) g[i] = p[i] - y[i];
  return g;
}

inline SymMatrix loss_hess_f(const LossKind& kind, std::span<const double> y,
                             std::span<const double> f) {
  detail::check_dims(kind, y, f);
  Matrix h(kind.m, kind.m);
  if (kind.type == LossType::MS) {
    for (std::size_t i = 0; i < kind.m; ++i) h(i, i) = 2.0 / static_cast<double>(kind.m);
    return SymMatrix(std::move(h));
  }
  const Vector p = softmax(f);
  for (std::size_t i = 0; i < kind.m; ++i) {
    for (std::size_t j = 0; j < kind.m; ++j) h(i, j) = -p[i] * p[j];
    h(i, i) += p[i];
  }
  return SymMatrix(std::move(h));
}

}  // namespace quadmech
