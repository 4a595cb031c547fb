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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// only when the harness itself breaks, so a red criterion stays visible
// without masking the rest of the suite.
//
// QUADMECH_ACCEPTANCE_ONLY=3,5 restricts the run to the listed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "quadmech/quadmech.hpp"

using namespace quadmech;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = QUADMECH_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double pooled(double a, double b) { return std::sqrt(0.5 * (a * a + b * b)); }

// ---------------------------------------------------------------------------
// Sinusoidal runs shared by criteria 1-4.

struct SinusoidalState {
  RunConfig cfg;
  std::map<std::uint64_t, PretrainOutcome> pretrained;  // by seed
  std::optional<FinetuneOutcome> finetune;              // on seed 0
};

SinusoidalState& sinusoidal() {
  static SinusoidalState s{load_run_config(kSource / "configs" / "sinusoidal.json"), {}, {}};
  return s;
}

const PretrainOutcome& pretrained(std::uint64_t seed) {
  auto& s = sinusoidal();
  auto it = s.pretrained.find(seed);
  if (it == s.pretrained.end()) {
    RunConfig cfg = parse_run_config([&] {
      nlohmann::json j = s.cfg.source;
      j["seed"] = seed;
      return j;
    }());
    const TaskData data = load_task_data(cfg);
    it = s.pretrained.emplace(seed, pretrain_model(cfg, data)).first;
  }
  return it->second;
}

const FinetuneOutcome& sinusoidal_sweep() {
  auto& s = sinusoidal();
  if (!s.finetune) {
    const TaskData data = load_task_data(s.cfg);
    s.finetune = run_finetune(s.cfg, data, pretrained(s.cfg.seed).params);
  }
  return *s.finetune;
}

const ResultRow& expm_row(const std::vector<ResultRow>& rows, double eps, double radius,
                          std::size_t p_tilde) {
  for (const auto& r : rows)
    if (r.method == "expm_quad" && r.epsilon == eps && r.radius == radius && r.p_tilde == p_tilde)
      return r;
  fail(ErrorCode::SchemaMismatch, "missing cell eps=" + num(eps) + " R=" + num(radius));
}

const ResultRow& reference_row(const std::vector<ResultRow>& rows, const std::string& method) {
  for (const auto& r : rows)
    if (r.method == method) return r;
  fail(ErrorCode::SchemaMismatch, "missing reference row " + method);
}

Verdict criterion_1() {
  bool ok = true;
  std::string d;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PretrainOutcome& p = pretrained(seed);
    const bool in_band = p.train_loss >= 0.05 && p.train_loss <= 0.13 &&
                         p.zero_shot_finetune >= 0.10 && p.zero_shot_finetune <= 0.25;
    ok = ok && in_band;
    d += "seed" + std::to_string(seed) + " train=" + num(p.train_loss) +
         " zero_shot=" + num(p.zero_shot_finetune) + (in_band ? "" : "*") + "; ";
  }
  return {ok, d + "bands train [0.05,0.13], zero-shot [0.10,0.25]"};
}

Verdict criterion_2() {
  const auto& rows = sinusoidal_sweep().rows_by_sweep.at("radius");
  const double zs = reference_row(rows, "zero_shot").mean;
  const std::vector<double> eps{0.1, 1, 2, 5, 10, 50};
  bool below = true;
  std::string d = "zero_shot=" + num(zs) + " R=0.1 p~=20:";
  for (double e : eps) {
    const ResultRow& r = expm_row(rows, e, 0.1, 20);
    d += " eps" + num(e) + "=" + num(r.mean) + "±" + num(r.std);
    if (e >= 1 && !(r.mean < zs)) below = false;
  }
  std::size_t inversions = 0;
  bool inversion_small = true;
  for (std::size_t k = 0; k + 1 < eps.size(); ++k) {
    const ResultRow& a = expm_row(rows, eps[k], 0.1, 20);
    const ResultRow& b = expm_row(rows, eps[k + 1], 0.1, 20);
    if (b.mean > a.mean) {
      ++inversions;
      if (b.mean - a.mean > pooled(a.std, b.std)) inversion_small = false;
    }
  }
  const bool monotone = inversions == 0 || (inversions == 1 && inversion_small);
  d += "; (a) below zero-shot for eps>=1: " + std::string(below ? "yes" : "no") +
       "; (b) inversions=" + std::to_string(inversions) + (monotone ? " ok" : " too many");
  return {below && monotone, d};
}

Verdict criterion_3() {
  const auto& rows = sinusoidal_sweep().rows_by_sweep.at("radius");
  const ResultRow& r1 = expm_row(rows, 50, 0.1, 20);
  const ResultRow& r5 = expm_row(rows, 50, 0.5, 20);
  const ResultRow& r01 = expm_row(rows, 50, 0.01, 20);
  const bool vs_big = r1.mean < r5.mean - pooled(r1.std, r5.std);
  const bool vs_small = r1.mean < r01.mean - pooled(r1.std, r01.std);
  return {vs_big && vs_small,
          "eps=50: R0.1=" + num(r1.mean) + "±" + num(r1.std) + " R0.5=" + num(r5.mean) + "±" +
              num(r5.std) + " R0.01=" + num(r01.mean) + "±" + num(r01.std) +
              "; beats R0.5 by 1 std: " + (vs_big ? "yes" : "no") +
              "; beats R0.01 by 1 std: " + (vs_small ? "yes" : "no")};
}

Verdict criterion_4() {
  const auto& rows = sinusoidal_sweep().rows_by_sweep.at("ptilde");
  const ResultRow& p5 = expm_row(rows, 50, 0.1, 5);
  const ResultRow& p20 = expm_row(rows, 50, 0.1, 20);
  const ResultRow& p40 = expm_row(rows, 50, 0.1, 40);
  const bool a = p20.mean <= p5.mean + pooled(p20.std, p5.std);
  const bool b = std::abs(p20.mean - p40.mean) <= pooled(p20.std, p40.std);
  return {a && b, "R=0.1 eps=50: p~5=" + num(p5.mean) + "±" + num(p5.std) +
                      " p~20=" + num(p20.mean) + "±" + num(p20.std) + " p~40=" + num(p40.mean) +
                      "±" + num(p40.std) + "; p20<=p5+std: " + (a ? "yes" : "no") +
                      "; |p20-p40|<=std: " + (b ? "yes" : "no")};
}

// ---------------------------------------------------------------------------

Verdict criterion_mnist() {
  RunConfig cfg = load_run_config(kSource / "configs" / "mnist.json");
  cfg.mechanism.epsilons = {0.1, 50};
  cfg.mechanism.sweeps = {SweepSpec{"radius", {0.1}, {400}}};
  cfg.baselines = BaselineConfig{};
  const TaskData data = load_task_data(cfg);
  const PretrainOutcome pre = pretrain_model(cfg, data);
  const FinetuneOutcome out = run_finetune(cfg, data, pre.params);
  const auto& rows = out.rows_by_sweep.at("radius");
  const ResultRow& lo = expm_row(rows, 0.1, 0.1, 400);
  const ResultRow& hi = expm_row(rows, 50, 0.1, 400);
  const double gap = hi.mean - lo.mean;
  const double sd = pooled(lo.std, hi.std);
  return {gap >= 2 * sd, "R=0.1 p~=400: acc eps0.1=" + num(lo.mean) + "±" + num(lo.std) +
                             " eps50=" + num(hi.mean) + "±" + num(hi.std) + " zero_shot=" +
                             num(reference_row(rows, "zero_shot").mean) + "; gap " + num(gap) +
                             " vs 2 std " + num(2 * sd)};
}

// ---------------------------------------------------------------------------
// Property criteria.

LabeledDataset random_data(Rng& rng, const ModelSpec& spec, bool ce, std::size_t n, double s) {
  Matrix x(n, spec.input_dim), y(n, spec.output_dim);
  fill_normal(rng, x.data(), s);
  for (std::size_t i = 0; i < n; ++i) {
    if (ce) y(i, rng() % spec.output_dim) = 1.0;
    else fill_normal(rng, y.row(i));
  }
  return LabeledDataset(ce ? Task::Classification : Task::Regression, x, y);
}

Verdict criterion_5() {
  Rng rng(5005);
  std::uniform_int_distribution<std::size_t> n_dist(2, 8), pool_dist(1, 4);
  std::uniform_real_distribution<double> r_dist(0.05, 2.0), s_dist(0.3, 3.0);
  const std::vector<ModelSpec> ms{{1, 1, {}, Activation::Identity},
                                  {2, 1, {}, Activation::Identity},
                                  {1, 1, {1}, Activation::Tanh},
                                  {1, 2, {}, Activation::Identity}};
  const std::vector<ModelSpec> ce{{1, 2, {}, Activation::Identity},
                                  {2, 2, {}, Activation::Identity},
                                  {1, 3, {}, Activation::Identity}};
  std::map<std::string, int> counts;
  int violations = 0;
  double tightest = 0.0;
  const int total = 240;
  for (int rep = 0; rep < total; ++rep) {
    const bool is_ce = rep % 2 == 1;
    const Adjacency adj = (rep / 2) % 2 ? Adjacency::ReplaceOne : Adjacency::AddOne;
    const ModelSpec spec = (is_ce ? ce : ms)[rep % (is_ce ? ce.size() : ms.size())];
    const LossKind kind = is_ce ? LossKind::ce(spec.output_dim) : LossKind::ms(spec.output_dim);
    Vector theta(spec.param_count());
    fill_normal(rng, theta, 0.7);
    const ParamVector anchor(spec, theta);
    const double s = s_dist(rng);
    const LabeledDataset base = random_data(rng, spec, is_ce, n_dist(rng), s);
    const LabeledDataset pool = random_data(rng, spec, is_ce, pool_dist(rng), s);
    LabeledDataset all = base;
    for (std::size_t i = 0; i < pool.size(); ++i) all = all.with_appended(pool.x(i), pool.y(i));
    const double radius = r_dist(rng);
    const double du =
        sensitivity({kind, base.size(), radius, empirical_jacobian_bound(anchor, all, 1.0),
                     is_ce ? 0.0 : empirical_error_bound(anchor, kind, all, 1.0), 1.0})
            .delta_u;
    const double brute = brute_force_sensitivity(
        anchor, kind, base, pool, radius, {adj, 2000, static_cast<std::uint64_t>(rep)});
    if (brute > du * (1 + 1e-9)) ++violations;
    tightest = std::max(tightest, brute / du);
    ++counts[std::string(is_ce ? "ce" : "ms") +
             (adj == Adjacency::AddOne ? "/add" : "/replace")];
  }
  std::string d = std::to_string(total) + " instances (";
  for (const auto& [k, v] : counts) d += k + ":" + std::to_string(v) + " ";
  d += "), violations=" + std::to_string(violations) + ", max brute/bound=" + num(tightest);
  return {violations == 0 && counts.size() == 4, d};
}

// Central differences, no shared code with the library's derivatives.
Matrix fd_jacobian(const ModelSpec& spec, const Vector& theta, const Vector& x, double h) {
  const std::size_t p = theta.size();
  Matrix j(spec.output_dim, p);
  Vector tp = theta, tm = theta;
  for (std::size_t k = 0; k < p; ++k) {
    tp[k] = theta[k] + h;
    tm[k] = theta[k] - h;
    const Vector fp = forward(spec, tp, x), fm = forward(spec, tm, x);
    for (std::size_t r = 0; r < spec.output_dim; ++r) j(r, k) = (fp[r] - fm[r]) / (2 * h);
    tp[k] = tm[k] = theta[k];
  }
  return j;
}

Verdict criterion_6() {
  Rng rng(6006);
  std::uniform_int_distribution<std::size_t> dim(1, 4), outs(1, 3), npts(1, 6);
  double worst_gn = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const ModelSpec spec{dim(rng), outs(rng), {}, Activation::Identity};
    const LossKind kind = LossKind::ms(spec.output_dim);
    Vector theta(spec.param_count());
    fill_normal(rng, theta);
    const LabeledDataset d = random_data(rng, spec, false, npts(rng), 1.0);
    const ParamVector anchor(spec, theta);
    const CurvatureBundle b = dataset_curvature(anchor, kind, d, 0.0);
    auto loss = [&](const Vector& t) { return dataset_loss(spec, t, kind, d); };
    const double h = 1e-4;
    for (std::size_t i = 0; i < theta.size(); ++i)
      for (std::size_t k = 0; k < theta.size(); ++k) {
        auto at = [&](double si, double sk) {
          Vector t = theta;
          t[i] += si * h;
          t[k] += sk * h;
          return loss(t);
        };
        const double fd = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
        worst_gn = std::max(worst_gn, std::abs(fd - b.hess(i, k)));
      }
  }
  // Jacobians on every architecture used anywhere, at kink-free points.
  const std::vector<ModelSpec> models{{5, 1, {10, 10}, Activation::Relu},
                                      {784, 10, {16}, Activation::Relu},
                                      {3, 1, {}, Activation::Identity},
                                      {3, 4, {6}, Activation::Tanh},
                                      {2, 2, {5, 4, 3}, Activation::Relu},
                                      {2, 3, {}, Activation::Identity}};
  double worst_j = 0.0;
  for (const auto& spec : models) {
    for (int rep = 0; rep < 3; ++rep) {
      Vector x(spec.input_dim);
      fill_normal(rng, x);
      ParamVector theta;
      Network net(spec);
      for (std::uint64_t s = 100 * rep;; ++s) {
        theta = init_params(spec, s, 1.5);
        net.forward(theta.values(), x);
        if (net.min_abs_preactivation() > 1e-3) break;
      }
      const Vector t(theta.values().begin(), theta.values().end());
      const Matrix fd = fd_jacobian(spec, t, x, 1e-5);
      worst_j = std::max(worst_j, max_abs_diff(jacobian(theta, x), fd));
    }
  }
  return {worst_gn <= 1e-6 && worst_j <= 1e-6,
          "GN vs FD Hessian (50 linear+MS) max|diff|=" + num(worst_gn) +
              "; Jacobian vs FD on " + std::to_string(models.size()) +
              " models max|diff|=" + num(worst_j)};
}

CurvatureBundle dense_bundle(const Matrix& h, const Vector& g) {
  CurvatureBundle b;
  b.anchor = ParamVector::zeros(ModelSpec{g.size() - 1, 1, {}, Activation::Identity});
  b.grad = g;
  b.hess = SymMatrix(h);
  b.n = 1;
  return b;
}

Matrix random_spd(Rng& rng, std::size_t p, double shift) {
  Matrix a(p, p);
  fill_normal(rng, a.data());
  Matrix h = matmul(a.transpose(), a);
  for (std::size_t i = 0; i < p; ++i) h(i, i) += shift * static_cast<double>(p);
  for (double& v : h.data()) v /= static_cast<double>(p);
  return h;
}

double phi(double x) { return stats::normal_cdf(x); }

Verdict criterion_7() {
  Rng rng(7007);
  std::string d;
  bool ok = true;
  // (i) untruncated moments, 1e5 draws.
  {
    const Matrix h = random_spd(rng, 3, 0.5);
    Vector g(3);
    fill_normal(rng, g);
    const CurvatureBundle b = dense_bundle(h, g);
    MechanismConfig cfg;
    cfg.epsilon = 2.0;
    cfg.delta_u = 0.5;
    cfg.radius = kUnboundedRadius;
    cfg.sampler = SamplerKind::Rejection;
    cfg.seed = 1;
    const std::size_t n = 100000;
    const MechanismRun run = run_mechanism(b, cfg, n);
    const Vector mu = mechanism_mean(b);
    // Σ = (2ΔŪ/ε) H⁻¹, column by column.
    const SpdFactor f = spd_factor(SymMatrix(h));
    Matrix sigma(3, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      Vector e(3, 0.0);
      e[c] = 1.0;
      const Vector col = solve_spd(f, e);
      for (std::size_t r = 0; r < 3; ++r) sigma(r, c) = col[r] / cfg.precision_scale();
    }
    Vector m(3, 0.0);
    for (const auto& t : run.thetas) axpy(1.0 / n, t, m);
    Matrix c(3, 3);
    for (const auto& t : run.thetas)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) c(i, j) += (t[i] - m[i]) * (t[j] - m[j]) / (n - 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs(m[i] - mu[i]) / std::sqrt(sigma(i, i) / n));
      for (std::size_t j = 0; j < 3; ++j) {
        const double se =
            std::sqrt((sigma(i, i) * sigma(j, j) + sigma(i, j) * sigma(i, j)) / n);
        worst = std::max(worst, std::abs(c(i, j) - sigma(i, j)) / se);
      }
    }
    ok = ok && worst <= 3.0;
    d += "moments worst |z|=" + num(worst) + " (<=3)";
  }
  // (ii) 1D truncated histogram, chi-square with pooled bins.
  {
    const double mean = 0.5, sd = 0.5, lo = -0.6, hi = 0.6;
    Matrix h(2, 2);
    h(0, 0) = 4.0;
    h(1, 1) = 1.0;
    CurvatureBundle b = dense_bundle(h, Vector{-2.0, 0.0});
    Matrix a(2, 1);
    a(0, 0) = 1.0;
    b = project_bundle(b, a);
    MechanismConfig cfg;
    cfg.epsilon = 1.0;
    cfg.delta_u = 0.5;
    cfg.radius = 0.6;
    cfg.sampler = SamplerKind::Rejection;
    cfg.seed = 2;
    const MechanismRun run = run_mechanism(b, cfg, 100000);
    const std::size_t bins = 40;
    std::vector<double> counts(bins, 0.0);
    for (const auto& p : run.points)
      counts[std::min<std::size_t>(bins - 1, static_cast<std::size_t>((p[0] - lo) / (hi - lo) * bins))]++;
    const double z = phi((hi - mean) / sd) - phi((lo - mean) / sd);
    double stat = 0.0, obs = 0.0, exp = 0.0;
    std::size_t cells = 0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double x0 = lo + (hi - lo) * k / bins, x1 = lo + (hi - lo) * (k + 1) / bins;
      obs += counts[k];
      exp += run.points.size() * (phi((x1 - mean) / sd) - phi((x0 - mean) / sd)) / z;
      if (exp >= 5.0 || k + 1 == bins) {
        stat += (obs - exp) * (obs - exp) / exp;
        obs = exp = 0.0;
        ++cells;
      }
    }
    const double pv = stats::chi_square_p_value(stat, cells - 1);
    ok = ok && pv > 0.01;
    d += "; 1D truncated chi2 p=" + num(pv) + " (>0.01)";
  }
  // (iii) Gibbs vs rejection on truncated, correlated 2D and 5D instances.
  for (std::size_t p : {2, 5}) {
    const Matrix h = random_spd(rng, p, 0.2);
    Vector g(p);
    fill_normal(rng, g, 0.8);
    const CurvatureBundle b = dense_bundle(h, g);
    MechanismConfig cfg;
    cfg.epsilon = 1.0;
    cfg.delta_u = 0.5;
    cfg.radius = 1.0;
    cfg.gibbs_burn_in = 200;
    cfg.gibbs_thin = 20;
    cfg.max_rejection_proposals = 50'000'000;
    cfg.sampler = SamplerKind::Gibbs;
    cfg.seed = 10 + p;
    const MechanismRun gibbs = run_mechanism(b, cfg, 800);
    cfg.sampler = SamplerKind::Rejection;
    cfg.seed = 20 + p;
    const MechanismRun rej = run_mechanism(b, cfg, 800);
    const double pv = stats::energy_test(gibbs.points, rej.points, 499, 30 + p);
    ok = ok && pv > 0.01;
    d += "; Gibbs vs rejection " + std::to_string(p) + "D energy p=" + num(pv) +
         " (rejection rate " + num(rej.diagnostics.rejection_rate.value_or(0)) + ")";
  }
  return {ok, d};
}

Verdict criterion_8() {
  const EpsilonInstance honest = make_epsilon_instance();
  double worst = 0.0, worst_margin = -1e9;
  int passed = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const AuditReport r = run_epsilon_audit(honest, 1000000, 30, derive_seed(8008, seed));
    passed += r.passed;
    worst = std::max(worst, r.statistic);
    worst_margin = std::max(worst_margin, r.statistic - r.bound - r.slack);
  }
  const EpsilonInstance broken = make_epsilon_instance(6, 5.0, 1.0, 0.05, 0.5);
  const AuditReport neg = run_epsilon_audit(broken, 1000000, 30, 8009);
  return {passed == 10 && !neg.passed,
          "honest: " + std::to_string(passed) + "/10 seeds pass, max eps_hat=" + num(worst) +
              " (eps=1, worst excess over eps+slack " + num(worst_margin) +
              "); halved sensitivity: eps_hat=" + num(neg.statistic) + " vs " +
              num(neg.bound + neg.slack) + (neg.passed ? " (did NOT fail)" : " fails as intended")};
}

Verdict criterion_9() {
  std::string d;
  bool ok = true;
  // Utility tail on the 1D instance.
  {
    MechanismConfig cfg;
    cfg.epsilon = 2.0;
    cfg.delta_u = 0.25;
    cfg.radius = 1.0;
    cfg.sampler = SamplerKind::Rejection;
    cfg.seed = 9001;
    const auto reports =
        utility_tail_check(quadratic_bundle_1d(0.5, 1.0, 0.0), cfg, {1, 2, 3, 4}, 200000);
    int informative = 0, good = 0;
    for (const auto& r : reports) {
      if (r.vacuous) continue;
      ++informative;
      good += r.passed;
    }
    ok = ok && informative > 0 && good == informative;
    d += "utility tail " + std::to_string(good) + "/" + std::to_string(informative) +
         " non-vacuous t";
  }
  // Beta lower tail, five triples.
  {
    const std::vector<std::array<double, 3>> triples{
        {10, 45, 0.5}, {20, 80, 0.5}, {5, 5, 0.3}, {50, 10, 0.2}, {3, 40, 0.9}};
    int good = 0;
    for (std::size_t k = 0; k < triples.size(); ++k) {
      const auto [a, b, e] = triples[k];
      good += beta_tail_check(a, b, e, 200000, derive_seed(9002, k)).passed;
    }
    const bool neg = !beta_tail_check(10, 45, 0.5, 200000, 9003, 100.0).passed;
    ok = ok && good == 5 && neg;
    d += "; beta tail " + std::to_string(good) + "/5 (inflated-alpha control " +
         (neg ? "fails" : "PASSES") + ")";
  }
  // Projection gap with p~ at its sufficient-dimension threshold.
  {
    const CurvatureBundle b = synthetic_bundle(200, 1.0, 9004);
    const GapGeometry geo = projection_geometry(b, 0.0, 0.5);
    const AuditReport r = projection_gap_check(b, 0.4 * geo.z_norm2, 0.1, 500, 9005);
    ok = ok && r.passed && !r.vacuous;
    d += "; projection gap p=200 p~=" + r.details["p_tilde"].dump() + " violations " +
         num(r.statistic) + " <= " + num(r.bound + r.slack);
  }
  // Rejection rate, five configurations.
  {
    int good = 0, informative = 0;
    for (std::uint64_t k = 0; k < 5; ++k) {
      const RegressionInstance inst =
          regression_instance(2 + k % 3, 200 + 100 * k, 50.0, 1.0, derive_seed(9006, k));
      MechanismConfig cfg;
      cfg.epsilon = 0.5 + 2.0 * k;
      cfg.radius = 1.0;
      cfg.seed = derive_seed(9007, k);
      const AuditReport r = rejection_rate_check(inst.bundle, cfg, inst.report, 20000);
      informative += !r.vacuous;
      good += r.passed;
    }
    ok = ok && good == 5;
    d += "; rejection rate " + std::to_string(good) + "/5 (" + std::to_string(informative) +
         " non-vacuous)";
  }
  // H_λ chain on 100 bundles.
  {
    int good = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const RegressionInstance inst = regression_instance(
          1 + s % 4, 20 + s % 30, 0.01 * static_cast<double>(s % 7), 1.0, derive_seed(9008, s));
      good += hlambda_chain_check(inst.bundle, inst.report.h_bar).passed;
    }
    ok = ok && good == 100;
    d += "; H_lambda chain " + std::to_string(good) + "/100";
  }
  return {ok, d};
}

Verdict criterion_10() {
  const RunConfig cfg = load_run_config(kSource / "configs" / "smoke.json");
  const fs::path root = fs::temp_directory_path() / "quadmech_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> bytes;
  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    cmd_pretrain(cfg, dir);
    cmd_finetune(cfg, dir / "checkpoint.bin", dir);
    bytes.push_back(read_bytes(sweep_csv_path(dir, "radius")) +
                    read_bytes(dir / "checkpoint.bin"));
  }
  const bool same = bytes[0] == bytes[1] && !bytes[0].empty();
  return {same, "smoke config, two full runs: results CSV and checkpoint " +
                    std::string(same ? "byte-identical" : "DIFFER") + " (blob " +
                    git_blob_hash(bytes[0]).substr(0, 12) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"1", criterion_1},  {"2", criterion_2}, {"3", criterion_3},
      {"4", criterion_4},  {"mnist", criterion_mnist}, {"5", criterion_5},
      {"6", criterion_6},  {"7", criterion_7}, {"8", criterion_8},
      {"9", criterion_9},  {"10", criterion_10}};
  std::set<std::string> only;
  if (const char* env = std::getenv("QUADMECH_ACCEPTANCE_ONLY")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ',')) only.insert(item);
  }
  int harness_errors = 0, failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++harness_errors;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("%s criterion %s: %s [%.0fs]\n", v.pass ? "PASS" : "FAIL", id.c_str(),
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d criteria red\n", failed);
  return harness_errors == 0 ? 0 : 2;
}
