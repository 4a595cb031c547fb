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

// Mini-batch SGD (with decoupled weight decay) for pretraining and the
// non-private reference, and a conservative DP-SGD comparator.
//
// The DP-SGD accountant is naive sequential composition of T Gaussian
// mechanisms at (ε/T, δ/T) each, with no subsampling amplification. It is
// deliberately loose; curves produced with it are not comparable to an RDP or
// moments accountant.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "quadmech/curvature.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/loss.hpp"
#include "quadmech/model.hpp"
#include "quadmech/random.hpp"

namespace quadmech {

// Per-step learning rate: constant, or cosine-annealed from lr to 0 over the
// full run.
enum class LrSchedule { Constant, Cosine };

inline LrSchedule parse_lr_schedule(std::string_view s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  fail(ErrorCode::ConfigInvalid, "unknown lr_schedule '" + std::string(s) + "'");
}

inline double scheduled_lr(double lr, LrSchedule schedule, std::size_t step,
                           std::size_t total_steps) {
  if (schedule == LrSchedule::Constant || total_steps == 0) return lr;
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * t));
}

struct SgdConfig {
  std::size_t epochs = 1;
  double lr = 1e-2;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::Constant;

  void validate() const {
    require(epochs >= 1, ErrorCode::InvalidInputs, "epochs must be >= 1");
    require(batch_size >= 1, ErrorCode::InvalidInputs, "batch_size must be >= 1");
    require(lr >= 0.0 && weight_decay >= 0.0, ErrorCode::InvalidInputs,
            "lr and weight_decay must be >= 0");
  }
};

struct DpsgdConfig {
  double epsilon = 1.0;
  double delta = 1e-5;
  double clip_norm = 1.0;
  std::size_t epochs = 1;
  double lr = 1e-2;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Replaces the accountant's noise multiplier when set (0 gives clipped SGD).
  std::optional<double> sigma_override;

  void validate() const {
    require(epsilon > 0.0, ErrorCode::InvalidInputs, "epsilon must be > 0");
    require(delta > 0.0 && delta < 1.0, ErrorCode::InvalidInputs, "delta must be in (0,1)");
    require(clip_norm > 0.0, ErrorCode::InvalidInputs, "clip_norm must be > 0");
    require(epochs >= 1 && batch_size >= 1, ErrorCode::InvalidInputs,
            "epochs and batch_size must be >= 1");
  }
};

// One row per epoch.
struct TraceRow {
  std::size_t step = 0;  // optimizer steps taken so far
  std::size_t epoch = 0;
  double loss = 0.0;     // mean minibatch loss seen during the epoch
  std::optional<double> accuracy;
  double clip_fraction = 0.0;
  double sigma = 0.0;
};

struct TrainResult {
  ParamVector params;
  std::vector<TraceRow> trace;
};

struct DpsgdAccounting {
  double epsilon = 0.0;
  double delta = 0.0;
  std::size_t steps = 0;
  double sigma = 0.0;  // noise multiplier
  std::string method = "conservative naive composition, no subsampling amplification";
};

struct DpsgdResult {
  ParamVector params;
  std::vector<TraceRow> trace;
  DpsgdAccounting accounting;
  std::size_t clipped = 0;
  double max_clipped_norm = 0.0;
};

// σ for T steps of the Gaussian mechanism at (ε/T, δ/T):
// sqrt(2 ln(1.25 T / δ)) · T / ε.
inline double naive_composition_sigma(double epsilon, double delta, std::size_t steps) {
  const double t = static_cast<double>(steps);
  const double sigma = std::sqrt(2.0 * std::log(1.25 * t / delta)) * t / epsilon;
  require(std::isfinite(sigma), ErrorCode::BudgetInfeasible,
          "noise multiplier is not finite for eps=" + std::to_string(epsilon));
  return sigma;
}

namespace detail {

inline std::size_t batches_per_epoch(std::size_t n, std::size_t batch) {
  return (n + batch - 1) / batch;
}

struct Schedule {
  Rng rng;
  std::vector<std::size_t> order;

  Schedule(std::size_t n, std::uint64_t seed) : rng(seed), order(n) {
    std::iota(order.begin(), order.end(), 0);
  }
  void reshuffle() { std::shuffle(order.begin(), order.end(), rng); }
};

inline void check_training_inputs(const ParamVector& init, const LossKind& kind,
                                  const LabeledDataset& data) {
  require(!data.empty(), ErrorCode::EmptyDataset, "training on an empty dataset");
  require(data.input_dim() == init.spec().input_dim &&
              data.output_dim() == init.spec().output_dim && kind.m == data.output_dim(),
          ErrorCode::DimensionMismatch, "dataset dims do not match the model");
}

}  // namespace detail

inline TrainResult sgd_train(const ParamVector& init, const LossKind& kind,
                             const LabeledDataset& data, const SgdConfig& cfg) {
  cfg.validate();
  detail::check_training_inputs(init, kind, data);
  Network net(init.spec());
  Vector theta(init.values().begin(), init.values().end());
  Vector grad(theta.size());
  detail::Schedule schedule(data.size(), cfg.seed);
  TrainResult result;
  std::size_t step = 0;
  const std::size_t total_steps =
      cfg.epochs * detail::batches_per_epoch(data.size(), cfg.batch_size);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    schedule.reshuffle();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(data.size(), start + cfg.batch_size);
      const double lr = scheduled_lr(cfg.lr, cfg.schedule, step, total_steps);
      const double inv_b = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = schedule.order[k];
        const auto f = net.forward(theta, data.x(i));
        loss_sum += loss_value(kind, data.y(i), f);
        net.backward(theta, loss_grad_f(kind, data.y(i), f), grad, inv_b);
      }
      const double decay = 1.0 - lr * cfg.weight_decay;
      for (std::size_t j = 0; j < theta.size(); ++j)
        theta[j] = decay * theta[j] - lr * grad[j];
      ++step;
    }
    const double epoch_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss)) {
      fail(ErrorCode::DivergedLoss, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    result.trace.push_back({step, epoch, epoch_loss, std::nullopt, 0.0, 0.0});
  }
  result.params = ParamVector(init.spec(), std::move(theta));
  return result;
}

// Per-example clipping to clip_norm, Gaussian noise of standard deviation
// σ·C/B on the averaged clipped gradient. Shuffling uses the same stream as
// sgd_train; noise uses a separate one so σ = 0 reproduces clipped SGD.
inline DpsgdResult dpsgd_train(const ParamVector& init, const LossKind& kind,
                               const LabeledDataset& data, const DpsgdConfig& cfg) {
  cfg.validate();
  detail::check_training_inputs(init, kind, data);
  const std::size_t steps =
      cfg.epochs * detail::batches_per_epoch(data.size(), cfg.batch_size);
  DpsgdResult result;
  result.accounting.epsilon = cfg.epsilon;
  result.accounting.delta = cfg.delta;
  result.accounting.steps = steps;
  const double sigma = cfg.sigma_override ? *cfg.sigma_override
                                          : naive_composition_sigma(cfg.epsilon, cfg.delta, steps);
  require(std::isfinite(sigma) && sigma >= 0.0, ErrorCode::BudgetInfeasible,
          "noise multiplier is not finite");
  result.accounting.sigma = sigma;

  Network net(init.spec());
  Vector theta(init.values().begin(), init.values().end());
  const std::size_t p = theta.size();
  Vector grad(p), example(p);
  detail::Schedule schedule(data.size(), cfg.seed);
  Rng noise_rng(derive_seed(cfg.seed, 0xd95));
  std::normal_distribution<double> normal;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    schedule.reshuffle();
    double loss_sum = 0.0;
    std::size_t clipped_epoch = 0;
    for (std::size_t start = 0; start < data.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(data.size(), start + cfg.batch_size);
      const double batch = static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = schedule.order[k];
        const auto f = net.forward(theta, data.x(i));
        loss_sum += loss_value(kind, data.y(i), f);
        std::fill(example.begin(), example.end(), 0.0);
        net.backward(theta, loss_grad_f(kind, data.y(i), f), example);
        const double en = norm(example);
        double scale = 1.0;
        if (en > cfg.clip_norm) {
          scale = cfg.clip_norm / en;
          ++clipped_epoch;
        }
        result.max_clipped_norm = std::max(result.max_clipped_norm, en * scale);
        axpy(scale / batch, example, grad);
      }
      if (sigma > 0.0) {
        const double sd = sigma * cfg.clip_norm / batch;
        for (double& g : grad) g += sd * normal(noise_rng);
      }
      for (std::size_t j = 0; j < p; ++j) theta[j] -= cfg.lr * grad[j];
      ++step;
    }
    const double epoch_loss = loss_sum / static_cast<double>(data.size());
    if (!std::isfinite(epoch_loss) ||
        !std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
      fail(ErrorCode::DivergedLoss, "DP-SGD diverged at epoch " + std::to_string(epoch));
    }
    result.clipped += clipped_epoch;
    result.trace.push_back({step, epoch, epoch_loss, std::nullopt,
                            static_cast<double>(clipped_epoch) / static_cast<double>(data.size()),
                            sigma});
  }
  result.params = ParamVector(init.spec(), std::move(theta));
  return result;
}

// Uniform fan-in initialization: weights and biases of a layer with `in`
// inputs are drawn from U(-s/sqrt(in), s/sqrt(in)) with s = scale.
inline ParamVector init_params(const ModelSpec& spec, std::uint64_t seed,
                               double scale = 1.0) {
  Rng rng(seed);
  Vector values(spec.param_count());
  const auto w = spec.layer_widths();
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double bound = scale / std::sqrt(static_cast<double>(w[l]));
    std::uniform_real_distribution<double> uni(-bound, bound);
    const std::size_t count = (w[l] + 1) * w[l + 1];
    for (std::size_t k = 0; k < count; ++k) values[offset + k] = uni(rng);
    offset += count;
  }
  return ParamVector(spec, std::move(values));
}

}  // namespace quadmech
