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

// Sensitivity calculus for the quadratic-utility exponential mechanism.
//
// Global bounds on the Jacobian norm and the model residual are estimated as
// maxima over the observed data times an inflation factor, so any guarantee
// built on them is conditional on those maxima covering the true suprema.
// Callers with analytic bounds can pass them to sensitivity() directly.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "quadmech/curvature.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/loss.hpp"
#include "quadmech/model.hpp"
#include "quadmech/random.hpp"

namespace quadmech {

inline constexpr double kSpectralTol = 1e-10;
inline constexpr int kSpectralMaxIter = 500;

// Spectral norm of J(x, θ*) without materializing J.
inline double jacobian_norm(Network& net, std::span<const double> theta,
                            std::span<const double> x) {
  net.forward(theta, x);
  const std::size_t p = net.param_count();
  const std::size_t m = net.output_dim();
  if (m == 1) {
    // A single row: the norm is the row's Euclidean length.
    Vector g(p, 0.0);
    const Vector one{1.0};
    net.backward(theta, one, g);
    return norm(g);
  }
  const auto result = operator_spectral_norm(
      [&](std::span<const double> v) {
        const auto out = net.tangent(theta, v);
        return Vector(out.begin(), out.end());
      },
      [&](std::span<const double> w) {
        Vector g(p, 0.0);
        net.backward(theta, w, g);
        return g;
      },
      m, p, kSpectralTol, kSpectralMaxIter);
  return result.value;
}

inline double empirical_jacobian_bound(const ParamVector& anchor, const LabeledDataset& data,
                                       double inflation) {
  require(!data.empty(), ErrorCode::EmptyDataset, "jacobian bound on empty dataset");
  require(inflation >= 1.0, ErrorCode::InvalidInputs, "inflation must be >= 1");
  Network net(anchor.spec());
  double mx = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i)
    mx = std::max(mx, jacobian_norm(net, anchor.values(), data.x(i)));
  return inflation * mx;
}

inline double empirical_error_bound(const ParamVector& anchor, const LossKind& kind,
                                    const LabeledDataset& data, double inflation) {
  require(kind.type == LossType::MS, ErrorCode::TaskMismatch,
          "the residual bound only enters the mean-squared sensitivity");
  require(!data.empty(), ErrorCode::EmptyDataset, "error bound on empty dataset");
  require(inflation >= 1.0, ErrorCode::InvalidInputs, "inflation must be >= 1");
  Network net(anchor.spec());
  double mx = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto f = net.forward(anchor.values(), data.x(i));
    mx = std::max(mx, norm(subtract(f, data.y(i))));
  }
  return inflation * mx;
}

struct SensitivityInputs {
  LossKind kind;
  std::size_t n_min = 1;      // N: smallest dataset size in the universe
  double radius = 1.0;        // R
  double jac_bound = 1.0;     // ∇̄, already inflated
  double err_bound = 0.0;     // Ē (MS only), already inflated
  double inflation = 1.0;     // recorded for the report
};

struct SensitivityReport {
  double delta_u = 0.0;  // ΔŪ
  double g_bar = 0.0;
  double h_bar = 0.0;
  // intermediate bounds
  double grad_f_bound = 0.0;  // bound on |∇_f ℓ|
  double hess_f_bound = 0.0;  // bound on |∇²_f ℓ|
  double jac_bound = 0.0;
  double err_bound = 0.0;
  double inflation = 1.0;
  std::size_t n_min = 1;
  double radius = 0.0;
};

// ΔŪ = (2Rḡ + R²H̄)/N with ḡ = ∇̄·max|∇_f ℓ| and H̄ = ∇̄²·max|∇²_f ℓ|.
// MS: |∇_f ℓ| ≤ (2/m)Ē, |∇²_f ℓ| ≤ 2/m. CE: |∇_f ℓ| ≤ √2, |∇²_f ℓ| ≤ 1/2.
inline SensitivityReport sensitivity(const SensitivityInputs& si) {
  require(si.n_min >= 1, ErrorCode::InvalidInputs, "N must be >= 1");
  require(si.radius >= 0.0 && std::isfinite(si.radius), ErrorCode::InvalidInputs,
          "R must be finite and >= 0");
  require(si.jac_bound > 0.0, ErrorCode::InvalidInputs, "jacobian bound must be > 0");
  require(si.err_bound >= 0.0, ErrorCode::InvalidInputs, "error bound must be >= 0");
  require(si.inflation >= 1.0, ErrorCode::InvalidInputs, "inflation must be >= 1");
  SensitivityReport r;
  const double m = static_cast<double>(si.kind.m);
  if (si.kind.type == LossType::MS) {
    r.grad_f_bound = 2.0 / m * si.err_bound;
    r.hess_f_bound = 2.0 / m;
  } else {
    r.grad_f_bound = std::numbers::sqrt2;
    r.hess_f_bound = 0.5;
  }
  r.g_bar = si.jac_bound * r.grad_f_bound;
  r.h_bar = si.jac_bound * si.jac_bound * r.hess_f_bound;
  const double radius = si.radius;
  r.delta_u = (2.0 * radius * r.g_bar + radius * radius * r.h_bar) /
              static_cast<double>(si.n_min);
  r.jac_bound = si.jac_bound;
  r.err_bound = si.err_bound;
  r.inflation = si.inflation;
  r.n_min = si.n_min;
  r.radius = radius;
  return r;
}

enum class Adjacency { AddOne, ReplaceOne };

struct BruteForceOptions {
  Adjacency adjacency = Adjacency::AddOne;
  std::size_t theta_samples = 2000;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kBruteForceMaxData = 20;
inline constexpr std::size_t kBruteForceMaxParams = 6;
inline constexpr std::size_t kBruteForceMaxSamples = 10000;

// Uniform draw from the ball of radius R in R^dim.
inline Vector uniform_in_ball(Rng& rng, std::size_t dim, double radius) {
  Vector v(dim);
  fill_normal(rng, v);
  const double nv = norm(v);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double r = radius * std::pow(uni(rng), 1.0 / static_cast<double>(dim));
  for (double& x : v) x *= r / nv;
  return v;
}

// Test oracle: max over sampled δ in the ball and over adjacent pairs
// (base plus one pool point, or base with one point replaced by a pool point)
// of |U(D, θ* + δ) - U(D', θ* + δ)|, ridge term excluded. For p <= 3 a grid
// over the ball is searched in addition to the random draws.
inline double brute_force_sensitivity(const ParamVector& anchor, const LossKind& kind,
                                      const LabeledDataset& base, const LabeledDataset& pool,
                                      double radius, const BruteForceOptions& opt = {}) {
  const std::size_t p = anchor.size();
  require(base.size() <= kBruteForceMaxData && p <= kBruteForceMaxParams &&
              opt.theta_samples <= kBruteForceMaxSamples,
          ErrorCode::BudgetExceeded, "brute-force oracle is for tiny instances only");
  require(!base.empty() && !pool.empty(), ErrorCode::EmptyDataset, "empty base or pool");

  struct Quadratic {
    Vector g;
    SymMatrix h;
  };
  auto point_terms = [&](const LabeledDataset& d) {
    std::vector<Quadratic> out;
    for (std::size_t i = 0; i < d.size(); ++i)
      out.push_back({per_point_gradient(anchor, kind, d.x(i), d.y(i)),
                     per_point_gn_hessian(anchor, kind, d.x(i), d.y(i))});
    return out;
  };
  const auto base_terms = point_terms(base);
  const auto pool_terms = point_terms(pool);
  auto u = [](const Quadratic& q, std::span<const double> delta) {
    return -(dot(delta, q.g) + 0.5 * q.h.quadratic_form(delta));
  };

  std::vector<Vector> deltas;
  Rng rng(opt.seed);
  for (std::size_t s = 0; s < opt.theta_samples; ++s)
    deltas.push_back(uniform_in_ball(rng, p, radius));
  if (p <= 3) {
    const std::size_t per_axis = p == 1 ? 201 : (p == 2 ? 41 : 13);
    std::vector<std::size_t> idx(p, 0);
    while (true) {
      Vector d(p);
      for (std::size_t k = 0; k < p; ++k)
        d[k] = radius * (-1.0 + 2.0 * static_cast<double>(idx[k]) /
                                    static_cast<double>(per_axis - 1));
      const double nd = norm(d);
      if (nd > radius) for (double& v : d) v *= radius / nd;
      deltas.push_back(std::move(d));
      std::size_t k = 0;
      while (k < p && ++idx[k] == per_axis) idx[k++] = 0;
      if (k == p) break;
    }
  }

  const double n = static_cast<double>(base.size());
  double worst = 0.0;
  Vector ub(base.size());
  for (const Vector& delta : deltas) {
    double mean = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
      ub[i] = u(base_terms[i], delta);
      mean += ub[i];
    }
    mean /= n;
    for (const Quadratic& z : pool_terms) {
      const double uz = u(z, delta);
      if (opt.adjacency == Adjacency::AddOne) {
        worst = std::max(worst, std::abs(uz - mean) / (n + 1.0));
      } else {
        for (std::size_t i = 0; i < base.size(); ++i)
          worst = std::max(worst, std::abs(uz - ub[i]) / n);
      }
    }
  }
  return worst;
}

// Smallest eigenvalue of the Gauss-Newton part H = H_λ - λI.
inline double min_gn_eigenvalue(const CurvatureBundle& bundle) {
  return sym_eigen(bundle.gauss_newton()).values.front();
}

// R̄_λ = ḡ / (λ + e_min(H)); bounds |μ - θ*| whenever ḡ >= |g|.
inline double r_lambda_bar(const CurvatureBundle& bundle, double g_bar) {
  const double denom = bundle.lambda + min_gn_eigenvalue(bundle);
  require(denom > 1e-12, ErrorCode::SingularCurvature,
          "λ + e_min(H) = " + std::to_string(denom));
  return g_bar / denom;
}

// Markov bound on Pr[|θ - θ*| > R] for an untruncated proposal, with
// ΔŪ = (2Rḡ + R²H̄)/N substituted:
// (2 p̄ R̄_λ / (N ε)) (2/R + H̄/ḡ) + (R̄_λ / R)².
inline double rejection_prob_bound(const CurvatureBundle& bundle, double epsilon,
                                   double radius, double g_bar, double h_bar,
                                   std::size_t n_min) {
  require(epsilon > 0.0 && radius > 0.0 && g_bar > 0.0 && n_min >= 1,
          ErrorCode::InvalidInputs, "rejection_prob_bound inputs");
  if (std::isinf(radius)) return 0.0;
  const double r_bar = r_lambda_bar(bundle, g_bar);
  const double dim = static_cast<double>(bundle.dim());
  const double first = 2.0 * dim * r_bar / (static_cast<double>(n_min) * epsilon) *
                       (2.0 / radius + h_bar / g_bar);
  return first + (r_bar / radius) * (r_bar / radius);
}

// The same Markov bound before substituting the eigenvalue estimates:
// ((2ΔŪ/ε) tr(H_λ⁻¹) + |H_λ⁻¹ g|²) / R².
inline double markov_rejection_bound(const CurvatureBundle& bundle, double delta_u,
                                     double epsilon, double radius) {
  const SpdFactor f = spd_factor(bundle.hess);
  double trace_inv = 0.0;
  Vector e(bundle.dim(), 0.0);
  for (std::size_t i = 0; i < bundle.dim(); ++i) {
    e[i] = 1.0;
    trace_inv += solve_spd(f, e)[i];
    e[i] = 0.0;
  }
  const Vector shift = solve_spd(f, bundle.grad);
  return (2.0 * delta_u / epsilon * trace_inv + dot(shift, shift)) / (radius * radius);
}

// Warning text when λ does not exceed H̄; the mechanism itself accepts any
// λ >= 0.
inline std::optional<std::string> lambda_warning(double lambda, double h_bar) {
  if (lambda > h_bar) return std::nullopt;
  return "lambda = " + std::to_string(lambda) + " does not exceed H_bar = " +
         std::to_string(h_bar);
}

}  // namespace quadmech
