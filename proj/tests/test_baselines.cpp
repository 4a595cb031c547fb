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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "quadmech/baselines.hpp"
#include "quadmech/sinusoidal.hpp"
#include "support.hpp"

using namespace quadmech;

namespace {

// y = 2x - 1 + noise on a scalar input.
LabeledDataset line_data(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix x(n, 1), y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = normal(rng);
    y(i, 0) = 2.0 * x(i, 0) - 1.0 + 0.1 * normal(rng);
  }
  return LabeledDataset(Task::Regression, std::move(x), std::move(y));
}

const ModelSpec kLine{1, 1, {}, Activation::Identity};

}  // namespace

TEST(Sgd, ZeroLearningRateReturnsInit) {
  const LabeledDataset d = line_data(40, 1);
  const ParamVector init = init_params(kLine, 3);
  SgdConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 5;
  cfg.batch_size = 7;
  const TrainResult r = sgd_train(init, LossKind::ms(1), d, cfg);
  EXPECT_EQ(r.params.values()[0], init.values()[0]);
  EXPECT_EQ(r.params.values()[1], init.values()[1]);
  ASSERT_EQ(r.trace.size(), 5u);
  for (const auto& row : r.trace) EXPECT_NEAR(row.loss, r.trace[0].loss, 1e-12);
  EXPECT_EQ(r.trace.back().step, 5u * 6u);
}

TEST(Sgd, LeastSquaresConvergesMonotonically) {
  const LabeledDataset d = line_data(200, 2);
  // Normal equations for (w, b).
  Eigen::MatrixXd a(200, 2);
  Eigen::VectorXd y(200);
  for (std::size_t i = 0; i < 200; ++i) {
    a(i, 0) = d.inputs(i, 0);
    a(i, 1) = 1.0;
    y(i) = d.targets(i, 0);
  }
  const Eigen::VectorXd star = (a.transpose() * a).ldlt().solve(a.transpose() * y);
  ParamVector theta(kLine, Vector{0.0, 0.0});
  double prev = std::hypot(star(0), star(1));
  SgdConfig cfg;
  cfg.lr = 0.01;
  cfg.batch_size = 200;
  for (int epoch = 0; epoch < 400; ++epoch) {
    cfg.seed = epoch;
    theta = sgd_train(theta, LossKind::ms(1), d, cfg).params;
    const double dist = std::hypot(theta.values()[0] - star(0), theta.values()[1] - star(1));
    EXPECT_LT(dist, prev);
    prev = dist;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(Sgd, FullBatchMatchesAnalyticGradientDescent) {
  const LabeledDataset d = line_data(30, 3);
  SgdConfig cfg;
  cfg.lr = 0.05;
  cfg.epochs = 25;
  cfg.batch_size = 30;
  const ParamVector init(kLine, Vector{0.4, -0.2});
  const TrainResult r = sgd_train(init, LossKind::ms(1), d, cfg);
  double w = 0.4, b = -0.2;
  for (std::size_t t = 0; t < cfg.epochs; ++t) {
    double gw = 0.0, gb = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double res = w * d.inputs(i, 0) + b - d.targets(i, 0);
      gw += 2.0 * res * d.inputs(i, 0) / 30.0;
      gb += 2.0 * res / 30.0;
    }
    w -= cfg.lr * gw;
    b -= cfg.lr * gb;
  }
  EXPECT_NEAR(r.params.values()[0], w, 1e-8);
  EXPECT_NEAR(r.params.values()[1], b, 1e-8);
}

TEST(Sgd, DecoupledWeightDecayShrinksTowardZero) {
  const LabeledDataset d = line_data(10, 4);
  SgdConfig cfg;
  cfg.lr = 0.0;
  cfg.weight_decay = 0.5;
  cfg.batch_size = 10;
  cfg.epochs = 1;
  // lr = 0 also switches off decay: the decay factor is 1 - lr·wd.
  const ParamVector init(kLine, Vector{1.0, 1.0});
  EXPECT_EQ(sgd_train(init, LossKind::ms(1), d, cfg).params.values()[0], 1.0);
  cfg.lr = 0.1;
  // Zero-residual data: only the decay acts, so θ ← 0.95 θ exactly.
  Matrix x(10, 1), y(10, 1);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
  const LabeledDataset zero(Task::Regression, x, y);
  const ParamVector z = sgd_train(ParamVector(kLine, Vector{0.0, 0.0}), LossKind::ms(1), zero, cfg)
                            .params;
  EXPECT_EQ(z.values()[0], 0.0);
}

TEST(Sgd, DeterministicAndDivergenceDetected) {
  const LabeledDataset d = line_data(50, 5);
  const ParamVector init = init_params(kLine, 6);
  SgdConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 9;
  const TrainResult r1 = sgd_train(init, LossKind::ms(1), d, cfg);
  const TrainResult r2 = sgd_train(init, LossKind::ms(1), d, cfg);
  EXPECT_TRUE(std::ranges::equal(r1.params.values(), r2.params.values()));
  cfg.lr = 1e4;
  cfg.epochs = 50;
  try {
    sgd_train(init, LossKind::ms(1), d, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivergedLoss);
  }
}

TEST(Sgd, CosineScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(scheduled_lr(0.1, LrSchedule::Cosine, 0, 100), 0.1);
  EXPECT_NEAR(scheduled_lr(0.1, LrSchedule::Cosine, 50, 100), 0.05, 1e-15);
  EXPECT_NEAR(scheduled_lr(0.1, LrSchedule::Cosine, 100, 100), 0.0, 1e-15);
  EXPECT_EQ(scheduled_lr(0.1, LrSchedule::Constant, 70, 100), 0.1);
}

TEST(Dpsgd, SigmaFollowsNaiveComposition) {
  EXPECT_NEAR(naive_composition_sigma(1.0, 1e-5, 1), std::sqrt(2 * std::log(1.25e5)), 1e-12);
  EXPECT_NEAR(naive_composition_sigma(2.0, 1e-5, 100),
              std::sqrt(2 * std::log(1.25e7)) * 50.0, 1e-9);
  EXPECT_THROW(naive_composition_sigma(1e-320, 1e-5, 1000), Error);
  const LabeledDataset d = line_data(20, 7);
  DpsgdConfig cfg;
  cfg.batch_size = 6;
  cfg.epochs = 2;
  const DpsgdResult r = dpsgd_train(init_params(kLine, 1), LossKind::ms(1), d, cfg);
  EXPECT_EQ(r.accounting.steps, 8u);
  EXPECT_NEAR(r.accounting.sigma, naive_composition_sigma(1.0, 1e-5, 8), 1e-12);
  EXPECT_EQ(r.accounting.method, "conservative naive composition, no subsampling amplification");
}

TEST(Dpsgd, ZeroSigmaEqualsClippedSgdBitExactly) {
  const LabeledDataset d = line_data(37, 8);
  const ParamVector init = init_params(kLine, 2);
  DpsgdConfig cfg;
  cfg.sigma_override = 0.0;
  cfg.clip_norm = 1e6;
  cfg.batch_size = 5;
  cfg.epochs = 3;
  cfg.lr = 0.02;
  cfg.seed = 11;
  SgdConfig sgd;
  sgd.batch_size = 5;
  sgd.epochs = 3;
  sgd.lr = 0.02;
  sgd.seed = 11;
  const DpsgdResult a = dpsgd_train(init, LossKind::ms(1), d, cfg);
  EXPECT_EQ(a.clipped, 0u);
  // Independent clipped-SGD oracle with the same shuffle stream.
  Vector theta(init.values().begin(), init.values().end());
  std::vector<std::size_t> order(37);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(11);
  for (int e = 0; e < 3; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < 37; s += 5) {
      const std::size_t end = std::min<std::size_t>(37, s + 5);
      double gw = 0, gb = 0;
      for (std::size_t k = s; k < end; ++k) {
        const std::size_t i = order[k];
        const double res = theta[0] * d.inputs(i, 0) + theta[1] - d.targets(i, 0);
        gw += 2 * res * d.inputs(i, 0) / static_cast<double>(end - s);
        gb += 2 * res / static_cast<double>(end - s);
      }
      theta[0] -= 0.02 * gw;
      theta[1] -= 0.02 * gb;
    }
  }
  EXPECT_NEAR(a.params.values()[0], theta[0], 1e-12);
  EXPECT_NEAR(a.params.values()[1], theta[1], 1e-12);
  const TrainResult b = sgd_train(init, LossKind::ms(1), d, sgd);
  EXPECT_NEAR(a.params.values()[0], b.params.values()[0], 1e-12);
}

TEST(Dpsgd, ClippingContract) {
  const LabeledDataset d = line_data(64, 9);
  DpsgdConfig cfg;
  cfg.clip_norm = 0.05;
  cfg.batch_size = 16;
  cfg.epochs = 3;
  cfg.epsilon = 10.0;
  const DpsgdResult r = dpsgd_train(init_params(kLine, 3), LossKind::ms(1), d, cfg);
  EXPECT_GT(r.clipped, 0u);
  EXPECT_LE(r.max_clipped_norm, cfg.clip_norm + 1e-9);
  for (const auto& row : r.trace) {
    EXPECT_GE(row.clip_fraction, 0.0);
    EXPECT_LE(row.clip_fraction, 1.0);
  }
  cfg.clip_norm = 1e8;
  EXPECT_EQ(dpsgd_train(init_params(kLine, 3), LossKind::ms(1), d, cfg).clipped, 0u);
}

TEST(Dpsgd, LargeEpsilonApproachesClippedSgd) {
  const LabeledDataset d = line_data(64, 10);
  const ParamVector init = init_params(kLine, 4);
  DpsgdConfig cfg;
  cfg.clip_norm = 1.0;
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.lr = 0.05;
  cfg.sigma_override = 0.0;
  const DpsgdResult ref = dpsgd_train(init, LossKind::ms(1), d, cfg);
  auto distance = [&](double eps) {
    DpsgdConfig c = cfg;
    c.sigma_override.reset();
    c.epsilon = eps;
    const DpsgdResult r = dpsgd_train(init, LossKind::ms(1), d, c);
    return std::hypot(r.params.values()[0] - ref.params.values()[0],
                      r.params.values()[1] - ref.params.values()[1]);
  };
  const double d3 = distance(1e3), d6 = distance(1e6);
  EXPECT_LT(d6, d3);
  EXPECT_LT(d6, 1e-3);
}

TEST(Dpsgd, InvalidConfigs) {
  const LabeledDataset d = line_data(8, 11);
  DpsgdConfig cfg;
  cfg.delta = 1.0;
  EXPECT_THROW(dpsgd_train(init_params(kLine, 1), LossKind::ms(1), d, cfg), Error);
  cfg.delta = 1e-5;
  cfg.clip_norm = 0.0;
  EXPECT_THROW(dpsgd_train(init_params(kLine, 1), LossKind::ms(1), d, cfg), Error);
  SgdConfig sgd;
  sgd.epochs = 0;
  EXPECT_THROW(sgd_train(init_params(kLine, 1), LossKind::ms(1), d, sgd), Error);
  EXPECT_THROW(sgd_train(init_params(ModelSpec{2, 1, {}, Activation::Identity}, 1),
                         LossKind::ms(1), d, SgdConfig{}),
               Error);
}

TEST(InitParams, FanInBoundsAndDeterminism) {
  const ModelSpec spec{5, 1, {20, 20}, Activation::Relu};
  const ParamVector a = init_params(spec, 7), b = init_params(spec, 7);
  EXPECT_EQ(a.values()[0], b.values()[0]);
  for (std::size_t k = 0; k < 6 * 20; ++k) EXPECT_LE(std::abs(a.values()[k]), 1 / std::sqrt(5.0));
  for (std::size_t k = 6 * 20; k < spec.param_count(); ++k)
    EXPECT_LE(std::abs(a.values()[k]), 1 / std::sqrt(20.0));
}
