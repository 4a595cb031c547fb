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

// Executable checks of the mechanism's privacy and utility claims. Each check
// returns an AuditReport with the exact statistic, the bound it is held to
// and the statistical slack applied.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadmech/curvature.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/mechanism.hpp"
#include "quadmech/random.hpp"
#include "quadmech/stats.hpp"

namespace quadmech {

struct AuditReport {
  std::string check_name;
  std::size_t samples_used = 0;
  double statistic = 0.0;
  double bound = 0.0;
  double slack = 0.0;
  bool passed = false;
  bool vacuous = false;  // bound carries no information; not counted as a pass
  std::uint64_t seed = 0;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const {
    return {{"check_name", check_name}, {"samples_used", samples_used},
            {"statistic", statistic},   {"bound", bound},
            {"slack", slack},           {"passed", passed},
            {"vacuous", vacuous},       {"seed", seed},
            {"details", details}};
  }
};

inline void append_jsonl(const std::filesystem::path& path,
                         const std::vector<AuditReport>& reports) {
  std::ofstream out(path, std::ios::app);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot append to " + path.string());
  for (const auto& r : reports) out << r.to_json().dump() << '\n';
}

// True when any informative check failed.
inline bool any_failed(const std::vector<AuditReport>& reports) {
  return std::any_of(reports.begin(), reports.end(),
                     [](const AuditReport& r) { return !r.vacuous && !r.passed; });
}

// ---------------------------------------------------------------------------
// Empirical ε on a 1D output.

struct BinGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t bins = 30;

  std::vector<std::size_t> histogram(std::span<const double> xs) const {
    std::vector<std::size_t> counts(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double x : xs) {
      if (x < lo || x > hi) continue;
      auto k = static_cast<std::size_t>((x - lo) / width);
      counts[std::min(k, bins - 1)] += 1;
    }
    return counts;
  }
};

inline constexpr std::size_t kMinBinCount = 50;

// ε̂ = max |log(p̂/q̂)| over bins where both counts reach kMinBinCount. The
// log-ratio of two counts a, b has standard error about sqrt(1/a + 1/b), so
// the slack is three times sqrt(2 / smallest included count).
inline AuditReport epsilon_from_samples(std::span<const double> a, std::span<const double> b,
                                        const BinGrid& grid, double epsilon) {
  require(grid.bins >= 1 && grid.hi > grid.lo, ErrorCode::InvalidInputs, "bin grid");
  const auto ca = grid.histogram(a);
  const auto cb = grid.histogram(b);
  const double scale = static_cast<double>(b.size()) / static_cast<double>(a.size());
  double worst = 0.0;
  std::size_t min_count = std::numeric_limits<std::size_t>::max();
  std::size_t used_bins = 0;
  std::size_t worst_bin = 0;
  for (std::size_t k = 0; k < grid.bins; ++k) {
    if (ca[k] < kMinBinCount || cb[k] < kMinBinCount) continue;
    ++used_bins;
    min_count = std::min({min_count, ca[k], cb[k]});
    const double lr = std::abs(std::log(static_cast<double>(ca[k]) * scale /
                                        static_cast<double>(cb[k])));
    if (lr > worst) {
      worst = lr;
      worst_bin = k;
    }
  }
  require(used_bins > 0, ErrorCode::InsufficientSamples,
          "no bin holds " + std::to_string(kMinBinCount) + " samples from both runs");
  AuditReport r;
  r.check_name = "empirical_epsilon";
  r.samples_used = a.size() + b.size();
  r.statistic = worst;
  r.bound = epsilon;
  r.slack = 3.0 * std::sqrt(2.0 / static_cast<double>(min_count));
  r.passed = worst <= epsilon + r.slack;
  r.details = {{"bins", grid.bins},        {"bins_used", used_bins},
               {"min_bin_count", min_count}, {"worst_bin", worst_bin},
               {"grid_lo", grid.lo},         {"grid_hi", grid.hi},
               {"slack_rule", "3*sqrt(2/min_bin_count)"}};
  return r;
}

// Draws n one-dimensional outputs of a mechanism trained on a dataset.
using MechanismRunner =
    std::function<std::vector<double>(const LabeledDataset&, std::size_t, std::uint64_t)>;

inline AuditReport empirical_epsilon(const MechanismRunner& runner, const LabeledDataset& d,
                                     const LabeledDataset& d_prime, const BinGrid& grid,
                                     std::size_t n_samples, double epsilon, std::uint64_t seed) {
  const auto a = runner(d, n_samples, derive_seed(seed, 1));
  const auto b = runner(d_prime, n_samples, derive_seed(seed, 2));
  AuditReport r = epsilon_from_samples(a, b, grid, epsilon);
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------------------
// Utility tail: Pr[U(θ) <= U_opt - tΔŪ] against (|B_t| / |B^c_{t/2}|) exp(-εt/4).

// Lebesgue measure of {x in [lo, hi] : f(x) > level}. Sign changes of
// f - level are bracketed on a uniform grid and refined by bisection.
inline double superlevel_length(const std::function<double(double)>& f, double level, double lo,
                                double hi, std::size_t cells = 4096, double tol = 1e-12) {
  const double h = (hi - lo) / static_cast<double>(cells);
  auto above = [&](double x) { return f(x) > level; };
  double total = 0.0;
  double x0 = lo;
  bool s0 = above(x0);
  double run_start = s0 ? lo : 0.0;
  for (std::size_t k = 1; k <= cells; ++k) {
    const double x1 = k == cells ? hi : lo + static_cast<double>(k) * h;
    const bool s1 = above(x1);
    if (s1 != s0) {
      double a = x0, b = x1;
      while (b - a > tol) {
        const double m = 0.5 * (a + b);
        (above(m) == s0 ? a : b) = m;
      }
      const double root = 0.5 * (a + b);
      if (s0) total += root - run_start;
      else run_start = root;
      s0 = s1;
    }
    x0 = x1;
  }
  if (s0) total += hi - run_start;
  return total;
}

struct Quadratic1D {
  double g = 0.0;  // gradient
  double h = 1.0;  // H_λ
  double utility(double xi) const { return -(g * xi + 0.5 * h * xi * xi); }
};

inline Quadratic1D quadratic_1d(const CurvatureBundle& bundle) {
  require(bundle.dim() == 1, ErrorCode::InvalidInputs, "tail check needs a 1D bundle");
  return {bundle.grad[0], bundle.hess(0, 0)};
}

// One report per t. Samples come from the bundle's mechanism; the ball is
// [c - R, c + R] in bundle coordinates.
inline std::vector<AuditReport> utility_tail_check(const CurvatureBundle& bundle,
                                                   const MechanismConfig& cfg,
                                                   const std::vector<double>& t_values,
                                                   std::size_t n_samples) {
  const Quadratic1D q = quadratic_1d(bundle);
  require(!std::isinf(cfg.radius), ErrorCode::InvalidInputs, "tail check needs a finite R");
  const double c = ball_center(bundle)[0];
  const double lo = c - cfg.radius;
  const double hi = c + cfg.radius;
  auto u = [&](double x) { return q.utility(x - c); };
  const double x_opt = std::clamp(c - q.g / q.h, lo, hi);
  const double u_opt = u(x_opt);

  const MechanismRun run = run_mechanism(bundle, cfg, n_samples);
  std::vector<double> utilities;
  utilities.reserve(run.points.size());
  for (const auto& p : run.points) utilities.push_back(u(p[0]));

  std::vector<AuditReport> out;
  for (double t : t_values) {
    const double cut = u_opt - t * cfg.delta_u;
    const double len_bt = (hi - lo) - superlevel_length(u, cut, lo, hi);
    const double len_half = superlevel_length(u, u_opt - 0.5 * t * cfg.delta_u, lo, hi);
    require(len_half > 0.0, ErrorCode::DegenerateSets, "|B^c_{t/2}| = 0 at t=" + std::to_string(t));
    const double bound = len_bt / len_half * std::exp(-cfg.epsilon * t / 4.0);
    const auto hits = static_cast<double>(
        std::count_if(utilities.begin(), utilities.end(), [&](double v) { return v <= cut; }));
    const double n = static_cast<double>(utilities.size());
    const double phat = hits / n;
    const double se = std::sqrt(std::max(phat, 1.0 / n) * (1.0 - phat) / n);
    AuditReport r;
    r.check_name = "utility_tail";
    r.samples_used = utilities.size();
    r.statistic = phat;
    r.bound = bound;
    r.slack = 3.0 * se;
    r.vacuous = bound >= 1.0;
    r.passed = phat <= bound + r.slack;
    r.seed = cfg.seed;
    r.details = {{"t", t},           {"epsilon", cfg.epsilon}, {"delta_u", cfg.delta_u},
                 {"radius", cfg.radius}, {"u_opt", u_opt},     {"len_b_t", len_bt},
                 {"len_bc_half_t", len_half}};
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Beta lower tail: Pr[X <= (1-η) α/(α+β)] <= exp(-αη²/4) for X ~ Beta(α, β).
// alpha_scale multiplies α inside the bound only (negative control).

inline AuditReport beta_tail_check(double alpha, double beta, double eta, std::size_t n_samples,
                                   std::uint64_t seed, double alpha_scale = 1.0) {
  require(alpha > 0.0 && beta > 0.0 && eta > 0.0 && eta < 1.0 && n_samples >= 1,
          ErrorCode::InvalidInputs, "beta_tail_check inputs");
  const double threshold = (1.0 - eta) * alpha / (alpha + beta);
  Rng rng(seed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_samples; ++i)
    if (stats::sample_beta(rng, alpha, beta) <= threshold) ++hits;
  const double n = static_cast<double>(n_samples);
  const double phat = static_cast<double>(hits) / n;
  AuditReport r;
  r.check_name = "beta_tail";
  r.samples_used = n_samples;
  r.statistic = phat;
  r.bound = std::exp(-alpha_scale * alpha * eta * eta / 4.0);
  r.slack = 3.0 * std::sqrt(std::max(phat, 1.0 / n) * (1.0 - phat) / n);
  r.passed = phat <= r.bound + r.slack;
  r.vacuous = r.bound >= 1.0;
  r.seed = seed;
  r.details = {{"alpha", alpha},         {"beta", beta},
               {"eta", eta},             {"threshold", threshold},
               {"exact_tail", stats::beta_cdf(alpha, beta, threshold)},
               {"alpha_scale", alpha_scale}};
  return r;
}

// ---------------------------------------------------------------------------
// Projection gap: with p̃ at the threshold max{2κp(1 - 2τ/|z|²), 32 log(1/γ)},
// Pr[U_opt - U_{A,opt} > τ] <= γ, where z = H_λ^{-1/2} g and κ is the
// condition number of H_λ.

struct GapGeometry {
  double kappa = 1.0;
  double z_norm2 = 0.0;  // |z|² = gᵀH_λ⁻¹g
  double threshold = 0.0;
};

inline GapGeometry projection_geometry(const CurvatureBundle& full, double tau, double gamma) {
  const SymEigen eig = sym_eigen(full.hess);
  require(eig.values.front() > 0.0, ErrorCode::NotPositiveDefinite, "H_λ");
  GapGeometry geo;
  geo.kappa = eig.values.back() / eig.values.front();
  const std::size_t p = full.dim();
  for (std::size_t k = 0; k < p; ++k) {
    const double proj = dot(eig.vectors.column(k), full.grad);
    geo.z_norm2 += proj * proj / eig.values[k];
  }
  double spectral = 0.0;
  if (geo.z_norm2 > 0.0) {
    require(tau < 0.5 * geo.z_norm2, ErrorCode::InvalidInputs, "need τ < |z|²/2");
    spectral = 2.0 * geo.kappa * static_cast<double>(p) * (1.0 - 2.0 * tau / geo.z_norm2);
  }
  geo.threshold = std::max(spectral, 32.0 * std::log(1.0 / gamma));
  return geo;
}

inline AuditReport projection_gap_check(const CurvatureBundle& full, double tau, double gamma,
                                        std::size_t n_draws, std::uint64_t seed) {
  require(!full.projected(), ErrorCode::InvalidInputs, "projection_gap_check takes a full bundle");
  require(tau > 0.0 && gamma > 0.0 && gamma < 1.0 && n_draws >= 1, ErrorCode::InvalidInputs,
          "projection_gap_check inputs");
  const GapGeometry geo = projection_geometry(full, tau, gamma);
  const std::size_t p = full.dim();
  const auto wanted = static_cast<std::size_t>(std::ceil(geo.threshold));
  const bool infeasible = wanted > p;
  const std::size_t p_tilde = std::min(wanted, p);

  std::size_t violations = 0;
  double worst_gap = 0.0;
  for (std::size_t k = 0; k < n_draws; ++k) {
    const ProjectionBundle proj = stiefel_sample(p, p_tilde, derive_seed(seed, k));
    const double gap = utility_gap(full, project_bundle(full, proj.a));
    worst_gap = std::max(worst_gap, gap);
    if (gap > tau) ++violations;
  }
  const double n = static_cast<double>(n_draws);
  const double frac = static_cast<double>(violations) / n;
  AuditReport r;
  r.check_name = "projection_gap";
  r.samples_used = n_draws;
  r.statistic = frac;
  r.bound = gamma;
  r.slack = 3.0 * std::sqrt(gamma * (1.0 - gamma) / n);
  r.passed = frac <= gamma + r.slack;
  r.vacuous = infeasible;
  r.seed = seed;
  r.details = {{"tau", tau},           {"gamma", gamma},      {"p", p},
               {"p_tilde", p_tilde},   {"threshold", geo.threshold},
               {"kappa", geo.kappa},   {"z_norm2", geo.z_norm2},
               {"worst_gap", worst_gap}};
  if (infeasible) r.details["note"] = std::string(error_code_name(ErrorCode::InfeasibleThreshold));
  return r;
}

// ---------------------------------------------------------------------------
// Rejection rate of the untruncated proposal against the Markov bound.

inline AuditReport rejection_rate_check(const CurvatureBundle& bundle, const MechanismConfig& cfg,
                                        const SensitivityReport& report, std::size_t accepted) {
  MechanismConfig c = cfg;
  c.sampler = SamplerKind::Rejection;
  c.delta_u = report.delta_u;
  const GaussianCore core = make_core(bundle, c);
  const SampleBatch batch = sample_rejection(core, ball_center(bundle), c, accepted);
  const double n = static_cast<double>(batch.proposals_used);
  const double rate = batch.rejection_rate;
  AuditReport r;
  r.check_name = "rejection_rate";
  r.samples_used = batch.proposals_used;
  r.statistic = rate;
  r.bound = rejection_prob_bound(bundle, c.epsilon, c.radius, report.g_bar, report.h_bar,
                                 report.n_min);
  r.slack = 3.0 * std::sqrt(std::max(rate, 1.0 / n) * (1.0 - rate) / n);
  r.passed = rate <= r.bound + r.slack;
  r.vacuous = r.bound >= 1.0;
  r.seed = c.seed;
  r.details = {{"epsilon", c.epsilon},
               {"radius", c.radius},
               {"markov_bound", markov_rejection_bound(bundle, c.delta_u, c.epsilon, c.radius)}};
  return r;
}

// 1/(λ + H̄) <= |H_λ⁻¹|₂ <= 1/(λ + e_min(H)), with |H_λ⁻¹|₂ from the spectrum.
inline AuditReport hlambda_chain_check(const CurvatureBundle& bundle, double h_bar) {
  const SymEigen eig = sym_eigen(bundle.hess);
  const double inv_norm = 1.0 / eig.values.front();
  const double e_min_h = eig.values.front() - bundle.lambda;
  const double lower = 1.0 / (bundle.lambda + h_bar);
  const double upper = 1.0 / (bundle.lambda + e_min_h);
  const double tol = 1e-9 * upper;
  AuditReport r;
  r.check_name = "hlambda_chain";
  r.statistic = inv_norm;
  r.bound = upper;
  r.slack = tol;
  r.passed = lower <= inv_norm + tol && inv_norm <= upper + tol;
  r.details = {{"lower", lower}, {"upper", upper}, {"h_bar", h_bar},
               {"e_max_h", eig.values.back() - bundle.lambda}};
  return r;
}

}  // namespace quadmech
