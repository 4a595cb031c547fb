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

// The quadratic-utility exponential mechanism. Because U is quadratic, the
// mechanism's density exp(ε U / (2ΔŪ)) on the ball |θ - θ*| <= R is a
// Gaussian with mean μ = θ* - H_λ⁻¹ g and covariance (2ΔŪ/ε) H_λ⁻¹,
// truncated to the ball.
//
// Samplers work in bundle coordinates: θ itself for a full bundle, ξ for a
// projected one (ball centred at 0, lifted back as θ = θ* + Aξ).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "quadmech/curvature.hpp"
#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/privacy.hpp"
#include "quadmech/random.hpp"
#include "quadmech/stats.hpp"

namespace quadmech {

enum class SamplerKind { Rejection, Gibbs };

inline std::string_view sampler_name(SamplerKind s) {
  return s == SamplerKind::Rejection ? "rejection" : "gibbs";
}

inline SamplerKind parse_sampler(std::string_view s) {
  if (s == "rejection") return SamplerKind::Rejection;
  if (s == "gibbs") return SamplerKind::Gibbs;
  fail(ErrorCode::ConfigInvalid, "unknown sampler '" + std::string(s) + "'");
}

inline constexpr double kUnboundedRadius = std::numeric_limits<double>::infinity();

struct MechanismConfig {
  double epsilon = 1.0;
  double delta_u = 1.0;                     // ΔŪ
  double radius = 1.0;                      // R; kUnboundedRadius disables truncation
  SamplerKind sampler = SamplerKind::Gibbs;
  std::size_t gibbs_burn_in = 500;
  std::size_t gibbs_thin = 5;
  std::size_t max_rejection_proposals = 1'000'000;
  std::uint64_t seed = 0;

  void validate() const {
    require(epsilon > 0.0, ErrorCode::InvalidInputs, "epsilon must be > 0");
    require(delta_u > 0.0, ErrorCode::InvalidInputs, "delta_u must be > 0");
    require(radius > 0.0, ErrorCode::InvalidInputs, "radius must be > 0");
    require(gibbs_thin >= 1, ErrorCode::InvalidInputs, "gibbs_thin must be >= 1");
  }

  // ε / (2ΔŪ): the precision multiplier on H_λ.
  double precision_scale() const { return epsilon / (2.0 * delta_u); }
};

struct GaussianCore {
  Vector mean;
  double precision_scale = 1.0;
  SymMatrix hess;    // H_λ; the precision is precision_scale * hess
  SpdFactor factor;  // of hess
};

// θ-space mean θ* - H_λ⁻¹g for a full bundle; ξ-space mean -H_{λ,A}⁻¹g_A for a
// projected one. The ξ-mean maximizes U_A (its gradient vanishes there).
inline Vector mechanism_mean(const CurvatureBundle& bundle, const SpdFactor& factor) {
  Vector step = solve_spd(factor, bundle.grad);
  if (bundle.projected()) {
    for (double& v : step) v = -v;
    return step;
  }
  Vector mu(bundle.anchor.values().begin(), bundle.anchor.values().end());
  for (std::size_t i = 0; i < mu.size(); ++i) mu[i] -= step[i];
  return mu;
}

inline Vector mechanism_mean(const CurvatureBundle& bundle) {
  return mechanism_mean(bundle, spd_factor(bundle.hess));
}

inline GaussianCore make_core(const CurvatureBundle& bundle, const MechanismConfig& cfg) {
  cfg.validate();
  SpdFactor factor = spd_factor(bundle.hess);
  Vector mu = mechanism_mean(bundle, factor);
  return GaussianCore{std::move(mu), cfg.precision_scale(), bundle.hess, std::move(factor)};
}

// Ball centre in bundle coordinates.
inline Vector ball_center(const CurvatureBundle& bundle) {
  if (bundle.projected()) return Vector(bundle.dim(), 0.0);
  return Vector(bundle.anchor.values().begin(), bundle.anchor.values().end());
}

namespace detail {

// Rejection sampling from N(0,1) restricted to a narrow or far-tail [a, b]
// where the inverse CDF loses all precision. For intervals at least as wide
// as the exponential scale, the proposal is a + Exp(α) (one-sided, mirrored
// for left tails); otherwise a uniform proposal on [a, b].
inline double truncnorm_tail(double a, double b, Rng& rng) {
  bool mirrored = false;
  if (b <= 0.0) {
    mirrored = true;
    std::tie(a, b) = std::pair{-b, -a};
  }
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  // Point of maximal density within [a, b].
  const double peak = a > 0.0 ? a : 0.0;
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  const bool use_exponential = a > 0.0 && (b - a) > 1.0 / alpha;
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    double z;
    double log_accept;
    if (use_exponential) {
      std::exponential_distribution<double> expo(alpha);
      z = a + expo(rng);
      if (z > b) continue;
      log_accept = -0.5 * (z - alpha) * (z - alpha);
    } else {
      z = a + (b - a) * uni(rng);
      log_accept = 0.5 * (peak * peak - z * z);
    }
    if (std::log(uni(rng)) <= log_accept) return mirrored ? -z : z;
  }
  fail(ErrorCode::NotConverged, "truncated-normal tail sampler did not accept");
}

}  // namespace detail

inline constexpr double kInverseCdfMinMass = 1e-10;

// Exact draw from N(mean, sd²) restricted to [lo, hi]; either bound may be
// infinite.
inline double sample_truncnorm_1d(double mean, double sd, double lo, double hi, Rng& rng) {
  require(sd > 0.0, ErrorCode::InvalidInputs, "sd must be > 0");
  require(lo < hi, ErrorCode::EmptyInterval,
          "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double z;
  if (a > 0.0) {
    // Right of the mode: work with survival functions.
    const double sa = stats::normal_sf(a);
    const double sb = stats::normal_sf(b);
    if (sa - sb < kInverseCdfMinMass) return mean + sd * detail::truncnorm_tail(a, b, rng);
    const double q = sa - uni(rng) * (sa - sb);
    z = q > 0.0 && q < 1.0 ? -stats::normal_quantile(q) : a;
  } else if (b < 0.0) {
    const double ca = stats::normal_cdf(a);
    const double cb = stats::normal_cdf(b);
    if (cb - ca < kInverseCdfMinMass) return mean + sd * detail::truncnorm_tail(a, b, rng);
    const double q = ca + uni(rng) * (cb - ca);
    z = q > 0.0 && q < 1.0 ? stats::normal_quantile(q) : b;
  } else {
    const double ca = stats::normal_cdf(a);
    const double cb = stats::normal_cdf(b);
    if (cb - ca < kInverseCdfMinMass) return mean + sd * detail::truncnorm_tail(a, b, rng);
    double q = ca + uni(rng) * (cb - ca);
    q = std::clamp(q, std::numeric_limits<double>::min(), 1.0 - 1e-17);
    z = stats::normal_quantile(q);
  }
  z = std::clamp(z, a, b);
  return mean + sd * z;
}

struct SampleBatch {
  std::vector<Vector> samples;  // bundle coordinates
  std::size_t proposals_used = 0;
  double rejection_rate = 0.0;
  std::size_t chain_length = 0;  // Gibbs scans, including burn-in
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Proposals μ + L⁻ᵀz / sqrt(precision_scale), accepted iff inside the ball.
inline SampleBatch sample_rejection(const GaussianCore& core, std::span<const double> center,
                                    const MechanismConfig& cfg, std::size_t count) {
  cfg.validate();
  require(count >= 1, ErrorCode::InvalidInputs, "count must be >= 1");
  require(center.size() == core.mean.size(), ErrorCode::DimensionMismatch, "center dim");
  Rng rng(cfg.seed);
  const double r2 = cfg.radius * cfg.radius;
  const double inv_sqrt_scale = 1.0 / std::sqrt(core.precision_scale);
  SampleBatch batch;
  Vector z(core.mean.size());
  while (batch.samples.size() < count) {
    if (batch.proposals_used >= cfg.max_rejection_proposals) {
      const double acc = static_cast<double>(batch.samples.size()) /
                         static_cast<double>(batch.proposals_used);
      fail(ErrorCode::ProposalBudgetExceeded,
           "accepted " + std::to_string(batch.samples.size()) + " of " +
               std::to_string(batch.proposals_used) +
               " proposals (acceptance rate " + std::to_string(acc) +
               "); grow R or use the Gibbs sampler");
    }
    fill_normal(rng, z);
    Vector theta = solve_lower_transpose(core.factor, z);
    for (std::size_t i = 0; i < theta.size(); ++i)
      theta[i] = core.mean[i] + inv_sqrt_scale * theta[i];
    ++batch.proposals_used;
    if (std::isinf(cfg.radius) || squared_distance(theta, center) <= r2)
      batch.samples.push_back(std::move(theta));
  }
  batch.rejection_rate = 1.0 - static_cast<double>(batch.samples.size()) /
                                   static_cast<double>(batch.proposals_used);
  return batch;
}

// Systematic-scan Gibbs sampler started at the ball centre. Each coordinate is
// redrawn from its Gaussian conditional, truncated to the chord of the ball
// through the current point. Keeps every gibbs_thin-th scan after burn-in.
inline SampleBatch sample_gibbs(const GaussianCore& core, std::span<const double> center,
                                const MechanismConfig& cfg, std::size_t count) {
  cfg.validate();
  require(count >= 1, ErrorCode::InvalidInputs, "count must be >= 1");
  const std::size_t d = core.mean.size();
  require(center.size() == d, ErrorCode::DimensionMismatch, "center dim");
  Rng rng(cfg.seed);
  const bool bounded = !std::isinf(cfg.radius);
  const double r2 = cfg.radius * cfg.radius;
  const Matrix& h = core.hess.matrix();
  Vector theta(center.begin(), center.end());
  Vector sd(d);
  for (std::size_t i = 0; i < d; ++i) sd[i] = 1.0 / std::sqrt(core.precision_scale * h(i, i));

  SampleBatch batch;
  const std::size_t total = cfg.gibbs_burn_in + count * cfg.gibbs_thin;
  for (std::size_t scan = 1; scan <= total; ++scan) {
    double dist2 = squared_distance(theta, center);
    if (bounded && dist2 > r2 * (1.0 + 1e-9)) {
      fail(ErrorCode::InfeasibleState, "Gibbs state left the ball");
    }
    for (std::size_t i = 0; i < d; ++i) {
      const auto hi_row = h.row(i);
      double coupling = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        if (j != i) coupling += hi_row[j] * (theta[j] - core.mean[j]);
      const double cond_mean = core.mean[i] - coupling / hi_row[i];
      const double off_i = theta[i] - center[i];
      double lo = -std::numeric_limits<double>::infinity();
      double hi = std::numeric_limits<double>::infinity();
      const double rest = std::max(0.0, dist2 - off_i * off_i);
      if (bounded) {
        const double half = std::sqrt(std::max(0.0, r2 - rest));
        if (!(half > 0.0)) {
          theta[i] = center[i];
          dist2 = rest;
          continue;
        }
        lo = center[i] - half;
        hi = center[i] + half;
      }
      theta[i] = sample_truncnorm_1d(cond_mean, sd[i], lo, hi, rng);
      const double off_new = theta[i] - center[i];
      dist2 = rest + off_new * off_new;
    }
    if (scan > cfg.gibbs_burn_in && (scan - cfg.gibbs_burn_in) % cfg.gibbs_thin == 0)
      batch.samples.push_back(theta);
  }
  batch.chain_length = total;
  return batch;
}

struct ProjectionBundle {
  Matrix a;  // p x p̃, orthonormal columns
  std::size_t p = 0;
  std::size_t p_tilde = 0;
  std::uint64_t seed = 0;
};

// Haar-uniform point on the Stiefel manifold: QR of an i.i.d. Gaussian matrix
// with the positive-diagonal convention.
inline ProjectionBundle stiefel_sample(std::size_t p, std::size_t p_tilde, std::uint64_t seed) {
  require(p_tilde >= 1 && p_tilde <= p, ErrorCode::InvalidInputs,
          "need 1 <= p_tilde <= p");
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(attempt == 0 ? seed : derive_seed(seed, attempt));
    Matrix g(p, p_tilde);
    fill_normal(rng, g.data());
    try {
      return ProjectionBundle{orthonormalize(g), p, p_tilde, seed};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankDeficient || attempt > 16) throw;
    }
  }
}

struct RunDiagnostics {
  std::optional<double> rejection_rate;  // rejection sampler only
  std::optional<double> rejection_bound;
  std::optional<double> r_bar_lambda;
  double mu_norm = 0.0;  // |μ - centre|
  double radius = 0.0;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::Gibbs;
  std::size_t burn_in = 0;
  std::size_t thin = 0;
  std::size_t chain_length = 0;
  std::size_t proposals_used = 0;
};

struct MechanismRun {
  std::vector<Vector> points;  // bundle coordinates
  std::vector<Vector> thetas;  // θ-space
  RunDiagnostics diagnostics;
};

// Draws `count` parameter vectors. When a sensitivity report is supplied the
// diagnostics carry R̄_λ and the rejection-probability bound.
inline MechanismRun run_mechanism(const CurvatureBundle& bundle, const MechanismConfig& cfg,
                                  std::size_t count,
                                  const SensitivityReport* report = nullptr) {
  const GaussianCore core = make_core(bundle, cfg);
  const Vector center = ball_center(bundle);
  SampleBatch batch = cfg.sampler == SamplerKind::Rejection
                          ? sample_rejection(core, center, cfg, count)
                          : sample_gibbs(core, center, cfg, count);
  MechanismRun run;
  run.diagnostics.mu_norm = std::sqrt(squared_distance(core.mean, center));
  run.diagnostics.radius = cfg.radius;
  run.diagnostics.seed = cfg.seed;
  run.diagnostics.sampler = cfg.sampler;
  run.diagnostics.burn_in = cfg.gibbs_burn_in;
  run.diagnostics.thin = cfg.gibbs_thin;
  run.diagnostics.chain_length = batch.chain_length;
  run.diagnostics.proposals_used = batch.proposals_used;
  if (cfg.sampler == SamplerKind::Rejection) run.diagnostics.rejection_rate = batch.rejection_rate;
  if (report && report->g_bar > 0.0) {
    try {
      run.diagnostics.r_bar_lambda = r_lambda_bar(bundle, report->g_bar);
      if (!std::isinf(cfg.radius))
        run.diagnostics.rejection_bound = rejection_prob_bound(
            bundle, cfg.epsilon, cfg.radius, report->g_bar, report->h_bar, report->n_min);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularCurvature) throw;
    }
  }
  run.thetas.reserve(batch.samples.size());
  for (const Vector& s : batch.samples) run.thetas.push_back(bundle.lift(s));
  run.points = std::move(batch.samples);
  return run;
}

// ½ gᵀH_λ⁻¹g - ½ g_Aᵀ H_{λ,A}⁻¹ g_A: optimal utility lost by restricting to
// the subspace of A.
inline double utility_gap(const CurvatureBundle& full, const CurvatureBundle& projected) {
  require(!full.projected() && projected.projected(), ErrorCode::InvalidInputs,
          "utility_gap takes a full and a projected bundle");
  const Vector a = solve_spd(spd_factor(full.hess), full.grad);
  const Vector b = solve_spd(spd_factor(projected.hess), projected.grad);
  return 0.5 * dot(full.grad, a) - 0.5 * dot(projected.grad, b);
}

// Projects a full bundle onto A without revisiting the data:
// g_A = Aᵀg, H_{λ,A} = Aᵀ H A + λI (identical to the data path in exact
// arithmetic).
inline CurvatureBundle project_bundle(const CurvatureBundle& full, Matrix a) {
  require(!full.projected() && a.rows() == full.dim(), ErrorCode::DimensionMismatch,
          "project_bundle needs a full bundle and a p x p̃ matrix");
  CurvatureBundle out;
  out.anchor = full.anchor;
  out.lambda = full.lambda;
  out.n = full.n;
  out.grad = matvec_transpose(a, full.grad);
  const Matrix ha = matmul(full.gauss_newton().matrix(), a);
  out.hess = SymMatrix(matmul(a.transpose(), ha)).shifted(full.lambda);
  out.projection = std::move(a);
  return out;
}

}  // namespace quadmech
