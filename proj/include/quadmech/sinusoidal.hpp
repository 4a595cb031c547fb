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

// Synthetic regression: x ~ N(0, I_5), y = a sin(2πx₁) + b x₂ + c.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "quadmech/dataset.hpp"
#include "quadmech/random.hpp"

namespace quadmech {

// Where the fine-tuning affine map x_i <- 1.1 (x_i + 0.1), i = 1, 2 acts.
// Input: the model sees the mapped inputs (the default).
// Target: only the target function is evaluated on mapped inputs.
enum class ShiftMode { Input, Target };

inline ShiftMode parse_shift_mode(std::string_view s) {
  if (s == "input") return ShiftMode::Input;
  if (s == "target") return ShiftMode::Target;
  fail(ErrorCode::ConfigInvalid, "unknown shift_mode '" + std::string(s) + "'");
}

struct SinusoidalParams {
  double a = 1.0;
  double b = 0.3;
  double c = 0.25;
  bool shift = false;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
  ShiftMode shift_mode = ShiftMode::Input;

  static SinusoidalParams pretrain(std::size_t n, std::uint64_t seed) {
    return {1.0, 0.3, 0.25, false, n, seed, ShiftMode::Input};
  }
  static SinusoidalParams finetune(std::size_t n, std::uint64_t seed) {
    return {0.9, 0.35, 0.25, true, n, seed, ShiftMode::Input};
  }
};

inline constexpr std::size_t kSinusoidalInputDim = 5;

inline LabeledDataset sinusoidal_generate(const SinusoidalParams& params) {
  require(params.n >= 1, ErrorCode::InvalidInputs, "sinusoidal n must be >= 1");
  Rng rng(params.seed);
  std::normal_distribution<double> normal;
  Matrix x(params.n, kSinusoidalInputDim);
  Matrix y(params.n, 1);
  for (std::size_t i = 0; i < params.n; ++i) {
    auto row = x.row(i);
    for (double& v : row) v = normal(rng);
    double x1 = row[0];
    double x2 = row[1];
    if (params.shift) {
      x1 = 1.1 * (x1 + 0.1);
      x2 = 1.1 * (x2 + 0.1);
      if (params.shift_mode == ShiftMode::Input) {
        row[0] = x1;
        row[1] = x2;
      }
    }
    y(i, 0) = params.a * std::sin(2.0 * std::numbers::pi * x1) + params.b * x2 + params.c;
  }
  return LabeledDataset(Task::Regression, std::move(x), std::move(y));
}

}  // namespace quadmech
