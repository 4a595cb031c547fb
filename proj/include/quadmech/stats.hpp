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

// Distribution functions and two-sample / goodness-of-fit tests used by the
// samplers and the audits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "quadmech/error.hpp"
#include "quadmech/linalg.hpp"
#include "quadmech/random.hpp"

namespace quadmech::stats {

inline double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / std::numbers::sqrt2); }

// Upper tail 1 - Φ(x), accurate for large positive x.
inline double normal_sf(double x) { return 0.5 * boost::math::erfc(x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, ErrorCode::InvalidInputs, "normal_quantile needs p in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double mean(std::span<const double> x) {
  require(!x.empty(), ErrorCode::InsufficientSamples, "mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

inline double std_error(std::span<const double> x) {
  return stddev(x) / std::sqrt(static_cast<double>(x.size()));
}

// Pr[χ²_dof >= stat].
inline double chi_square_p_value(double stat, double dof) {
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

inline double beta_cdf(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return boost::math::ibeta(a, b, x);
}

inline double sample_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double u = ga(rng);
  const double v = gb(rng);
  return u / (u + v);
}

// Asymptotic Kolmogorov survival function Q_KS(λ).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    s += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

// One-sample KS test against a continuous CDF; returns the p-value (with the
// Stephens small-sample correction).
template <typename Cdf>
double ks_test(std::vector<double> x, Cdf&& cdf) {
  require(!x.empty(), ErrorCode::InsufficientSamples, "ks_test on empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

// Energy-distance two-sample permutation test on points (rows). Returns the
// p-value (with the +1 correction).
inline double energy_test(const std::vector<Vector>& a, const std::vector<Vector>& b,
                          std::size_t permutations, std::uint64_t seed) {
  require(!a.empty() && !b.empty(), ErrorCode::InsufficientSamples, "energy_test needs data");
  std::vector<const Vector*> all;
  for (const auto& v : a) all.push_back(&v);
  for (const auto& v : b) all.push_back(&v);
  const std::size_t n = all.size();
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = norm(subtract(*all[i], *all[j]));
      dist[i * n + j] = d;
      dist[j * n + i] = d;
    }
  const std::size_t na = a.size();
  auto statistic = [&](const std::vector<std::size_t>& perm) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in_a = i < na;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = dist[perm[i] * n + perm[j]];
        const bool j_a = j < na;
        if (in_a && j_a) aa += d;
        else if (!in_a && !j_a) bb += d;
        else if (in_a) ab += d;
      }
    }
    const double ma = static_cast<double>(na);
    const double mb = static_cast<double>(n - na);
    return 2.0 * ab / (ma * mb) - aa / (ma * ma) - bb / (mb * mb);
  };
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const double observed = statistic(perm);
  Rng rng(seed);
  std::size_t at_least = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    std::shuffle(perm.begin(), perm.end(), rng);
    if (statistic(perm) >= observed) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(permutations + 1);
}

}  // namespace quadmech::stats
