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

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"

namespace quadmech {

enum class Task { Regression, Classification };

// Ordered (input, target) pairs; row i of inputs pairs with row i of targets.
// Classification targets are one-hot (or probability) rows.
struct LabeledDataset {
  Task task = Task::Regression;
  Matrix inputs;
  Matrix targets;

  LabeledDataset() = default;
  LabeledDataset(Task t, Matrix x, Matrix y)
      : task(t), inputs(std::move(x)), targets(std::move(y)) {
    require(inputs.rows() == targets.rows(), ErrorCode::CountMismatch,
            "inputs and targets differ in row count");
  }

  std::size_t size() const noexcept { return inputs.rows(); }
  bool empty() const noexcept { return size() == 0; }
  std::size_t input_dim() const noexcept { return inputs.cols(); }
  std::size_t output_dim() const noexcept { return targets.cols(); }

  std::span<const double> x(std::size_t i) const { return inputs.row(i); }
  std::span<const double> y(std::size_t i) const { return targets.row(i); }

  LabeledDataset subset(std::span<const std::size_t> indices) const {
    Matrix x_out(indices.size(), input_dim());
    Matrix y_out(indices.size(), output_dim());
    for (std::size_t k = 0; k < indices.size(); ++k) {
      require(indices[k] < size(), ErrorCode::InsufficientData, "subset index out of range");
      std::copy_n(x(indices[k]).begin(), input_dim(), x_out.row(k).begin());
      std::copy_n(y(indices[k]).begin(), output_dim(), y_out.row(k).begin());
    }
    return LabeledDataset(task, std::move(x_out), std::move(y_out));
  }

  LabeledDataset with_appended(std::span<const double> xi, std::span<const double> yi) const {
    require(xi.size() == input_dim() && yi.size() == output_dim(),
            ErrorCode::DimensionMismatch, "appended point dims");
    std::vector<double> xs(inputs.data().begin(), inputs.data().end());
    std::vector<double> ys(targets.data().begin(), targets.data().end());
    xs.insert(xs.end(), xi.begin(), xi.end());
    ys.insert(ys.end(), yi.begin(), yi.end());
    return LabeledDataset(task, Matrix(size() + 1, input_dim(), std::move(xs)),
                          Matrix(size() + 1, output_dim(), std::move(ys)));
  }

  // Copy with point i replaced.
  LabeledDataset with_replaced(std::size_t i, std::span<const double> xi,
                               std::span<const double> yi) const {
    require(i < size() && xi.size() == input_dim() && yi.size() == output_dim(),
            ErrorCode::DimensionMismatch, "replaced point dims");
    LabeledDataset out = *this;
    std::copy(xi.begin(), xi.end(), out.inputs.row(i).begin());
    std::copy(yi.begin(), yi.end(), out.targets.row(i).begin());
    return out;
  }

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

}  // namespace quadmech

#include <numeric>
#include <random>

#include "quadmech/random.hpp"

namespace quadmech {

// Seeded shuffle, then the first n_take rows. Stratified mode takes an equal
// share from each class (argmax of the target row); any remainder is filled
// from the leftover shuffled rows.
inline LabeledDataset split_and_subset(const LabeledDataset& data, std::size_t n_take,
                                       std::uint64_t seed, bool stratified = false,
                                       std::vector<std::size_t>* chosen = nullptr) {
  require(n_take <= data.size(), ErrorCode::InsufficientData,
          "requested " + std::to_string(n_take) + " rows from " +
              std::to_string(data.size()));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> pick;
  if (!stratified) {
    pick.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_take));
  } else {
    const std::size_t classes = data.output_dim();
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i : order) {
      const auto y = data.y(i);
      by_class[std::max_element(y.begin(), y.end()) - y.begin()].push_back(i);
    }
    const std::size_t per_class = n_take / classes;
    std::vector<bool> used(data.size(), false);
    for (const auto& members : by_class) {
      require(members.size() >= per_class, ErrorCode::InsufficientData,
              "a class has fewer than " + std::to_string(per_class) + " rows");
      for (std::size_t k = 0; k < per_class; ++k) {
        pick.push_back(members[k]);
        used[members[k]] = true;
      }
    }
    for (std::size_t i : order) {
      if (pick.size() == n_take) break;
      if (!used[i]) pick.push_back(i);
    }
    // Interleave classes rather than leaving them in blocks.
    std::shuffle(pick.begin(), pick.end(), rng);
  }
  if (chosen) *chosen = pick;
  return data.subset(pick);
}

// Rows not in `taken`, in ascending index order.
inline LabeledDataset complement(const LabeledDataset& data,
                                 std::span<const std::size_t> taken) {
  std::vector<bool> used(data.size(), false);
  for (std::size_t i : taken) used.at(i) = true;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!used[i]) rest.push_back(i);
  return data.subset(rest);
}

}  // namespace quadmech
