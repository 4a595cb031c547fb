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

// Built-in instances for the audit checks and the config-driven runner used
// by `quadmech audit`.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadmech/audit.hpp"
#include "quadmech/curvature.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/mechanism.hpp"
#include "quadmech/privacy.hpp"
#include "quadmech/random.hpp"

namespace quadmech {

// Linear model x -> w x + b restricted to the w axis (p̃ = 1). D holds n
// copies of (x, -1); D' replaces the last with (x, +1). At θ* = 0 every
// point has the largest residual and Jacobian in the pool, so the closed-form
// ΔŪ is close to the true sensitivity and a halved ΔŪ is detectable.
struct EpsilonInstance {
  LabeledDataset d;
  LabeledDataset d_prime;
  ParamVector anchor;
  Matrix projection;  // 2 x 1
  SensitivityReport report;
  double epsilon = 1.0;
  double radius = 0.05;
};

inline EpsilonInstance make_epsilon_instance(std::size_t n_points = 6, double x = 5.0,
                                             double epsilon = 1.0, double radius = 0.05,
                                             double sensitivity_scale = 1.0) {
  require(n_points >= 1, ErrorCode::InvalidInputs, "need at least one point");
  EpsilonInstance inst;
  const ModelSpec spec{1, 1, {}, Activation::Identity};
  Matrix xs(n_points, 1), ys(n_points, 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    xs(i, 0) = x;
    ys(i, 0) = -1.0;
  }
  inst.d = LabeledDataset(Task::Regression, xs, ys);
  const std::vector<double> xi{x}, yi{1.0};
  inst.d_prime = inst.d.with_replaced(n_points - 1, xi, yi);
  inst.anchor = ParamVector::zeros(spec);
  inst.projection = Matrix(2, 1);
  inst.projection(0, 0) = 1.0;
  const LabeledDataset pool = inst.d.with_appended(xi, yi);
  const LossKind kind = LossKind::ms(1);
  inst.report = sensitivity({kind, n_points, radius,
                             empirical_jacobian_bound(inst.anchor, pool, 1.0),
                             empirical_error_bound(inst.anchor, kind, pool, 1.0), 1.0});
  inst.report.delta_u *= sensitivity_scale;
  inst.epsilon = epsilon;
  inst.radius = radius;
  return inst;
}

// Exact i.i.d. draws of ξ: in one dimension each Gibbs scan samples the full
// truncated conditional, so burn-in 0 and thinning 1 lose nothing.
inline MechanismRunner epsilon_runner(const EpsilonInstance& inst) {
  return [&inst](const LabeledDataset& data, std::size_t n, std::uint64_t seed) {
    const CurvatureBundle bundle =
        dataset_curvature(inst.anchor, LossKind::ms(1), data, 0.0, inst.projection);
    MechanismConfig mc;
    mc.epsilon = inst.epsilon;
    mc.delta_u = inst.report.delta_u;
    mc.radius = inst.radius;
    mc.sampler = SamplerKind::Gibbs;
    mc.gibbs_burn_in = 0;
    mc.gibbs_thin = 1;
    mc.seed = seed;
    const GaussianCore core = make_core(bundle, mc);
    const SampleBatch batch = sample_gibbs(core, ball_center(bundle), mc, n);
    std::vector<double> out;
    out.reserve(batch.samples.size());
    for (const auto& s : batch.samples) out.push_back(s[0]);
    return out;
  };
}

inline AuditReport run_epsilon_audit(const EpsilonInstance& inst, std::size_t n_samples,
                                     std::size_t bins, std::uint64_t seed) {
  AuditReport r = empirical_epsilon(epsilon_runner(inst), inst.d, inst.d_prime,
                                    BinGrid{-inst.radius, inst.radius, bins}, n_samples,
                                    inst.epsilon, seed);
  r.details["delta_u"] = inst.report.delta_u;
  r.details["radius"] = inst.radius;
  return r;
}

// Hand-built one-dimensional bundle U(ξ) = -(gξ + ½(h+λ)ξ²).
inline CurvatureBundle quadratic_bundle_1d(double g, double h, double lambda) {
  CurvatureBundle b;
  b.anchor = ParamVector::zeros(ModelSpec{1, 1, {}, Activation::Identity});
  Matrix a(2, 1);
  a(0, 0) = 1.0;
  b.projection = a;
  b.grad = {g};
  Matrix hm(1, 1);
  hm(0, 0) = h + lambda;
  b.hess = SymMatrix(hm);
  b.lambda = lambda;
  b.n = 1;
  return b;
}

// Full bundle with H_λ = Q diag(1 .. κ, log-spaced) Qᵀ and Gaussian g.
inline CurvatureBundle synthetic_bundle(std::size_t p, double kappa, std::uint64_t seed,
                                        double grad_scale = 1.0) {
  require(p >= 2 && kappa >= 1.0, ErrorCode::InvalidInputs, "synthetic_bundle inputs");
  Rng rng(seed);
  const Matrix q = stiefel_sample(p, p, derive_seed(seed, 1)).a;
  Matrix h(p, p);
  for (std::size_t k = 0; k < p; ++k) {
    const double ev =
        std::pow(kappa, static_cast<double>(k) / static_cast<double>(p - 1));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) h(i, j) += ev * q(i, k) * q(j, k);
  }
  CurvatureBundle b;
  b.anchor = ParamVector::zeros(ModelSpec{p - 1, 1, {}, Activation::Identity});
  b.grad.assign(p, 0.0);
  fill_normal(rng, b.grad, grad_scale);
  b.hess = SymMatrix(h);
  b.lambda = 0.0;
  b.n = 1;
  return b;
}

// Ridge-regularized linear regression bundle on random data, with its
// closed-form sensitivity (inflation 1, bounds over the dataset itself).
struct RegressionInstance {
  CurvatureBundle bundle;
  SensitivityReport report;
};

inline RegressionInstance regression_instance(std::size_t input_dim, std::size_t n,
                                              double lambda, double radius,
                                              std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, input_dim), y(n, 1);
  fill_normal(rng, x.data());
  fill_normal(rng, y.data(), 0.5);
  const LabeledDataset data(Task::Regression, x, y);
  const ModelSpec spec{input_dim, 1, {}, Activation::Identity};
  Vector theta(spec.param_count());
  fill_normal(rng, theta, 0.1);
  const ParamVector anchor(spec, theta);
  const LossKind kind = LossKind::ms(1);
  RegressionInstance inst;
  inst.bundle = dataset_curvature(anchor, kind, data, lambda);
  inst.report = sensitivity({kind, n, radius, empirical_jacobian_bound(anchor, data, 1.0),
                             empirical_error_bound(anchor, kind, data, 1.0), 1.0});
  return inst;
}

// ---------------------------------------------------------------------------
// Config-driven suite. Each entry of audit.checks is an object with a "type"
// and that check's parameters; a missing list runs default_audit_checks().

inline nlohmann::json default_audit_checks() {
  using nlohmann::json;
  return json::array({
      json{{"type", "empirical_epsilon"}, {"n_samples", 1000000}, {"seeds", 3}, {"bins", 30}},
      json{{"type", "utility_tail"},
           {"g", 0.5},
           {"h", 1.0},
           {"lambda", 0.0},
           {"radius", 1.0},
           {"epsilon", 2.0},
           {"delta_u", 0.25},
           {"t_values", {1.0, 2.0, 5.0}},
           {"n_samples", 200000}},
      json{{"type", "beta_tail"}, {"alpha", 10.0}, {"beta", 45.0}, {"eta", 0.5},
           {"n_samples", 200000}},
      json{{"type", "projection_gap"}, {"p", 200}, {"kappa", 1.0}, {"tau_fraction", 0.4},
           {"gamma", 0.1}, {"n_draws", 200}},
  });
}

// broken_sensitivity halves ΔŪ in the ε audit (negative control).
inline std::vector<AuditReport> run_audit_suite(const nlohmann::json& audit, std::uint64_t seed) {
  const bool broken = audit.value("broken_sensitivity", false);
  const nlohmann::json checks =
      audit.contains("checks") ? audit.at("checks") : default_audit_checks();
  std::vector<AuditReport> out;
  std::size_t index = 0;
  for (const auto& c : checks) {
    const std::uint64_t s = derive_seed(seed, 0xa0d17 + index++);
    try {
      const std::string type = c.at("type").get<std::string>();
      if (type == "empirical_epsilon") {
        const EpsilonInstance inst = make_epsilon_instance(
            c.value("n_points", std::size_t{6}), c.value("x", 5.0), c.value("epsilon", 1.0),
            c.value("radius", 0.05), broken ? 0.5 : 1.0);
        const auto seeds = c.value("seeds", std::size_t{1});
        for (std::size_t k = 0; k < seeds; ++k) {
          AuditReport r = run_epsilon_audit(inst, c.value("n_samples", std::size_t{1000000}),
                                            c.value("bins", std::size_t{30}), derive_seed(s, k));
          r.details["broken_sensitivity"] = broken;
          out.push_back(std::move(r));
        }
      } else if (type == "utility_tail") {
        const CurvatureBundle b = quadratic_bundle_1d(c.value("g", 0.5), c.value("h", 1.0),
                                                      c.value("lambda", 0.0));
        MechanismConfig mc;
        mc.epsilon = c.value("epsilon", 2.0);
        mc.delta_u = c.value("delta_u", 0.25);
        mc.radius = c.value("radius", 1.0);
        mc.sampler = SamplerKind::Rejection;
        mc.seed = s;
        const auto ts = c.value("t_values", std::vector<double>{1.0, 2.0, 5.0});
        for (auto& r : utility_tail_check(b, mc, ts, c.value("n_samples", std::size_t{200000})))
          out.push_back(std::move(r));
      } else if (type == "beta_tail") {
        out.push_back(beta_tail_check(c.value("alpha", 10.0), c.value("beta", 45.0),
                                      c.value("eta", 0.5),
                                      c.value("n_samples", std::size_t{200000}), s,
                                      c.value("alpha_scale", 1.0)));
      } else if (type == "projection_gap") {
        const CurvatureBundle b =
            synthetic_bundle(c.value("p", std::size_t{200}), c.value("kappa", 1.0), s);
        const GapGeometry geo = projection_geometry(b, 0.0, 0.5);
        const double tau = c.value("tau_fraction", 0.4) * geo.z_norm2;
        out.push_back(projection_gap_check(b, tau, c.value("gamma", 0.1),
                                           c.value("n_draws", std::size_t{200}),
                                           derive_seed(s, 1)));
      } else if (type == "rejection_rate") {
        const RegressionInstance inst = regression_instance(
            c.value("input_dim", std::size_t{3}), c.value("n", std::size_t{200}),
            c.value("lambda", 50.0), c.value("radius", 1.0), derive_seed(s, 1));
        MechanismConfig mc;
        mc.epsilon = c.value("epsilon", 1.0);
        mc.radius = c.value("radius", 1.0);
        mc.seed = derive_seed(s, 2);
        out.push_back(rejection_rate_check(inst.bundle, mc, inst.report,
                                           c.value("accepted", std::size_t{20000})));
      } else {
        fail(ErrorCode::ConfigInvalid, "unknown audit check '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ConfigInvalid, std::string("audit check: ") + e.what());
    }
  }
  return out;
}

}  // namespace quadmech
