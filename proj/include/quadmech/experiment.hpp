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

// End-to-end pipelines behind the CLI: dataset assembly, pretraining, the
// (ε, R, p̃) fine-tuning sweep with baselines, result CSVs and the run
// manifest.

#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <functional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadmech/baselines.hpp"
#include "quadmech/checkpoint.hpp"
#include "quadmech/config.hpp"
#include "quadmech/curvature.hpp"
#include "quadmech/data_io.hpp"
#include "quadmech/dataset.hpp"
#include "quadmech/mechanism.hpp"
#include "quadmech/parallel.hpp"
#include "quadmech/privacy.hpp"
#include "quadmech/sinusoidal.hpp"
#include "quadmech/stats.hpp"

namespace quadmech {

// ---------------------------------------------------------------------------
// Content hashing (git blob SHA-1).

inline std::string sha1_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), digest, &len) == 1,
          ErrorCode::IoError, "SHA-1 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string git_blob_hash(std::string_view bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  blob.append(bytes);
  return sha1_hex(blob);
}

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "file not found: " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Datasets.

struct TaskData {
  LabeledDataset pretrain;
  LabeledDataset finetune;
  LabeledDataset test;  // held out, same distribution as finetune
  std::vector<std::filesystem::path> files;  // on-disk inputs, for the manifest
};

inline TaskData load_task_data(const RunConfig& cfg) {
  TaskData out;
  const DataConfig& d = cfg.data;
  switch (cfg.task) {
    case TaskKind::Sinusoidal: {
      auto pre = SinusoidalParams::pretrain(d.n_pretrain, derive_seed(cfg.seed, 1));
      auto fin = SinusoidalParams::finetune(d.n_finetune, derive_seed(cfg.seed, 2));
      auto tst = SinusoidalParams::finetune(d.n_test, derive_seed(cfg.seed, 3));
      fin.shift_mode = tst.shift_mode = d.shift_mode;
      out.pretrain = sinusoidal_generate(pre);
      out.finetune = sinusoidal_generate(fin);
      out.test = sinusoidal_generate(tst);
      break;
    }
    case TaskKind::Mnist: {
      require(!d.images.empty() && !d.labels.empty(), ErrorCode::DataMissing,
              "mnist task needs data.images and data.labels");
      const auto images = cfg.resolve(d.images);
      const auto labels = cfg.resolve(d.labels);
      for (const auto& p : {images, labels})
        require(std::filesystem::exists(p), ErrorCode::DataMissing, "missing " + p.string());
      const ImageDataset pool = mnist_load_idx(images, labels);
      std::vector<std::size_t> taken;
      const LabeledDataset pre =
          split_and_subset(pool.data, d.n_pretrain, derive_seed(cfg.seed, 1), true, &taken);
      std::vector<std::size_t> rest_idx;
      {
        std::vector<bool> used(pool.data.size(), false);
        for (std::size_t i : taken) used[i] = true;
        for (std::size_t i = 0; i < used.size(); ++i)
          if (!used[i]) rest_idx.push_back(i);
      }
      const LabeledDataset rest = pool.data.subset(rest_idx);
      std::vector<std::size_t> fin_taken;
      const LabeledDataset fin =
          split_and_subset(rest, d.n_finetune, derive_seed(cfg.seed, 2), true, &fin_taken);
      const LabeledDataset tst =
          split_and_subset(complement(rest, fin_taken), d.n_test, derive_seed(cfg.seed, 3), true);
      auto prep = [&](const LabeledDataset& ds, double noise, std::uint64_t s) {
        return corrupt_and_normalize(ImageDataset{ds, pool.provenance}, noise, d.norm_mean,
                                     d.norm_std, s)
            .data;
      };
      out.pretrain = prep(pre, 0.0, derive_seed(cfg.seed, 11));
      out.finetune = prep(fin, d.noise_std, derive_seed(cfg.seed, 12));
      out.test = prep(tst, d.noise_std, derive_seed(cfg.seed, 13));
      out.files = {images, labels};
      break;
    }
    case TaskKind::Tabular: {
      for (const auto* p : {&d.pretrain_csv, &d.finetune_csv, &d.test_csv})
        require(!p->empty(), ErrorCode::DataMissing,
                "tabular task needs pretrain_csv, finetune_csv and test_csv");
      out.files = {cfg.resolve(d.pretrain_csv), cfg.resolve(d.finetune_csv),
                   cfg.resolve(d.test_csv)};
      out.pretrain = load_tabular_csv(out.files[0]);
      out.finetune = load_tabular_csv(out.files[1]);
      out.test = load_tabular_csv(out.files[2]);
      break;
    }
  }
  for (const auto* ds : {&out.pretrain, &out.finetune, &out.test}) {
    require(!ds->empty(), ErrorCode::EmptyDataset, "a dataset split is empty");
    require(ds->input_dim() == cfg.model.input_dim && ds->output_dim() == cfg.model.output_dim,
            ErrorCode::ConfigInvalid,
            "model dims " + std::to_string(cfg.model.input_dim) + " -> " +
                std::to_string(cfg.model.output_dim) + " do not match the data (" +
                std::to_string(ds->input_dim()) + " -> " + std::to_string(ds->output_dim()) + ")");
  }
  return out;
}

// Reported metric: mean loss for regression, accuracy for classification.
inline std::string metric_name(const LabeledDataset& test) {
  return test.task == Task::Regression ? "mse" : "accuracy";
}

inline double evaluate_metric(const ModelSpec& spec, std::span<const double> theta,
                              const LossKind& kind, const LabeledDataset& test) {
  return test.task == Task::Regression ? dataset_loss(spec, theta, kind, test)
                                       : dataset_accuracy(spec, theta, test);
}

// ---------------------------------------------------------------------------
// Pretraining.

struct PretrainOutcome {
  ParamVector params;
  std::vector<TraceRow> trace;
  double train_loss = 0.0;
  double zero_shot_finetune = 0.0;  // loss on the fine-tuning set
  double zero_shot_test = 0.0;      // loss on the held-out set
  std::string metric;
  double metric_pretrain = 0.0;
  double metric_test = 0.0;
};

inline PretrainOutcome pretrain_model(const RunConfig& cfg, const TaskData& data) {
  const ParamVector init =
      init_params(cfg.model, derive_seed(cfg.seed, 5), cfg.pretrain.init_scale);
  TrainResult tr = sgd_train(init, cfg.loss, data.pretrain, cfg.pretrain.sgd);
  PretrainOutcome out;
  out.train_loss = dataset_loss(cfg.model, tr.params.values(), cfg.loss, data.pretrain);
  out.zero_shot_finetune = dataset_loss(cfg.model, tr.params.values(), cfg.loss, data.finetune);
  out.zero_shot_test = dataset_loss(cfg.model, tr.params.values(), cfg.loss, data.test);
  out.metric = metric_name(data.test);
  out.metric_pretrain = evaluate_metric(cfg.model, tr.params.values(), cfg.loss, data.pretrain);
  out.metric_test = evaluate_metric(cfg.model, tr.params.values(), cfg.loss, data.test);
  out.params = std::move(tr.params);
  out.trace = std::move(tr.trace);
  return out;
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::IoError, "short write to " + path.string());
}

inline void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace) {
  std::string s = "epoch,step,loss\n";
  for (const auto& r : trace)
    s += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + format_number(r.loss) + "\n";
  write_text(path, s);
}

inline constexpr const char* kCheckpointFile = "checkpoint.bin";

// Writes checkpoint.bin, pretrain_trace.csv and pretrain_summary.json.
inline PretrainOutcome cmd_pretrain(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const TaskData data = load_task_data(cfg);
  std::filesystem::create_directories(out_dir);
  PretrainOutcome out = pretrain_model(cfg, data);
  save_checkpoint(out_dir / kCheckpointFile, out.params, cfg.seed);
  write_trace_csv(out_dir / "pretrain_trace.csv", out.trace);
  const nlohmann::json summary = {{"train_loss", out.train_loss},
                                  {"zero_shot_finetune_loss", out.zero_shot_finetune},
                                  {"zero_shot_test_loss", out.zero_shot_test},
                                  {"metric", out.metric},
                                  {"metric_pretrain", out.metric_pretrain},
                                  {"metric_test", out.metric_test},
                                  {"p", out.params.size()},
                                  {"seed", cfg.seed}};
  write_text(out_dir / "pretrain_summary.json", summary.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Result rows.

inline constexpr const char* kSchemaLine = "#schema=1";
inline constexpr const char* kResultHeader =
    "method,epsilon,R,p_tilde,metric,mean,std,n_models,seed";

struct ResultRow {
  std::string method;
  double epsilon = std::numeric_limits<double>::infinity();  // inf for non-private rows
  double radius = 0.0;
  std::size_t p_tilde = 0;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n_models = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline ResultRow summarize(std::string method, double epsilon, double radius,
                           std::size_t p_tilde, std::string metric,
                           const std::vector<double>& values, std::uint64_t seed) {
  ResultRow r{std::move(method), epsilon, radius, p_tilde, std::move(metric), 0.0, 0.0,
              values.size(), seed};
  r.mean = stats::mean(values);
  r.std = values.size() > 1 ? stats::stddev(values) : 0.0;
  return r;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string s = std::string(kSchemaLine) + "\n" + kResultHeader + "\n";
  for (const auto& r : rows) {
    s += r.method + "," + format_number(r.epsilon) + "," + format_number(r.radius) + "," +
         std::to_string(r.p_tilde) + "," + r.metric + "," + format_number(r.mean) + "," +
         format_number(r.std) + "," + std::to_string(r.n_models) + "," +
         std::to_string(r.seed) + "\n";
  }
  return s;
}

inline std::vector<ResultRow> parse_results_csv(const std::string& text,
                                                const std::string& origin = "<csv>") {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == kSchemaLine, ErrorCode::SchemaMismatch,
          origin + ": missing '" + kSchemaLine + "' header");
  require(std::getline(in, line) && line == kResultHeader, ErrorCode::SchemaMismatch,
          origin + ": unexpected column header");
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    require(cells.size() == 9, ErrorCode::SchemaMismatch, origin + ": bad row '" + line + "'");
    try {
      ResultRow r;
      r.method = cells[0];
      r.epsilon = std::stod(cells[1]);
      r.radius = std::stod(cells[2]);
      r.p_tilde = std::stoul(cells[3]);
      r.metric = cells[4];
      r.mean = std::stod(cells[5]);
      r.std = std::stod(cells[6]);
      r.n_models = std::stoul(cells[7]);
      r.seed = std::stoull(cells[8]);
      require(r.std >= 0.0, ErrorCode::SchemaMismatch, origin + ": negative std");
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      fail(ErrorCode::SchemaMismatch, origin + ": unparsable row '" + line + "'");
    }
  }
  return rows;
}

inline std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  return parse_results_csv(read_bytes(path), path.string());
}

// ---------------------------------------------------------------------------
// JSON views of reports.

inline nlohmann::json to_json(const SensitivityReport& r) {
  return {{"delta_u", r.delta_u},           {"g_bar", r.g_bar},
          {"h_bar", r.h_bar},               {"grad_f_bound", r.grad_f_bound},
          {"hess_f_bound", r.hess_f_bound}, {"jac_bound", r.jac_bound},
          {"err_bound", r.err_bound},       {"inflation", r.inflation},
          {"n_min", r.n_min},               {"radius", r.radius}};
}

inline nlohmann::json to_json(const RunDiagnostics& d) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"rejection_rate", opt(d.rejection_rate)},
          {"rejection_bound", opt(d.rejection_bound)},
          {"r_bar_lambda", opt(d.r_bar_lambda)},
          {"mu_norm", d.mu_norm},
          {"seed", d.seed},
          {"sampler", std::string(sampler_name(d.sampler))},
          {"chain_params",
           {{"burn_in", d.burn_in},
            {"thin", d.thin},
            {"chain_length", d.chain_length},
            {"proposals_used", d.proposals_used}}}};
}

// ---------------------------------------------------------------------------
// Fine-tuning sweep.

inline MechanismConfig mechanism_config(const MechanismSweepConfig& m, double epsilon,
                                        double delta_u, double radius, std::uint64_t seed) {
  MechanismConfig c;
  c.epsilon = epsilon;
  c.delta_u = delta_u;
  c.radius = radius;
  c.sampler = m.sampler == SamplerChoice::Rejection ? SamplerKind::Rejection : SamplerKind::Gibbs;
  c.gibbs_burn_in = m.gibbs_burn_in;
  c.gibbs_thin = m.gibbs_thin;
  c.max_rejection_proposals = m.max_rejection_proposals;
  c.seed = seed;
  return c;
}

// "auto" tries exact rejection sampling on a bounded proposal budget and
// falls back to Gibbs when the acceptance rate is too low.
inline MechanismRun sample_candidates(const CurvatureBundle& bundle, MechanismConfig mc,
                                      SamplerChoice choice, std::size_t count,
                                      const SensitivityReport& report) {
  if (choice != SamplerChoice::Auto) return run_mechanism(bundle, mc, count, &report);
  MechanismConfig rej = mc;
  rej.sampler = SamplerKind::Rejection;
  rej.max_rejection_proposals = std::min<std::size_t>(mc.max_rejection_proposals, 1000 * count);
  try {
    return run_mechanism(bundle, rej, count, &report);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ProposalBudgetExceeded) throw;
  }
  mc.sampler = SamplerKind::Gibbs;
  return run_mechanism(bundle, mc, count, &report);
}

struct SweepCell {
  std::size_t sweep = 0;
  double epsilon = 0.0;
  double radius = 0.0;
  std::size_t p_tilde = 0;
};

struct CellOutcome {
  bool done = false;
  ResultRow row;
  nlohmann::json diagnostics;
};

struct FinetuneOutcome {
  std::map<std::string, std::vector<ResultRow>> rows_by_sweep;  // keyed by sweep name
  std::vector<ResultRow> reference_rows;  // zero-shot and non-private SGD
  nlohmann::json diagnostics = nlohmann::json::array();
  nlohmann::json sensitivity = nlohmann::json::array();
};

struct FinetuneContext {
  const RunConfig& cfg;
  const TaskData& data;
  const ParamVector& anchor;
  std::size_t p = 0;
  bool per_model = true;
  std::optional<CurvatureBundle> full;           // per-model mode
  std::map<std::size_t, CurvatureBundle> by_pt;  // per-cell mode, keyed by p̃
  double jac_bound = 0.0;
  double err_bound = 0.0;
  std::string metric;
};

// Projection seeds depend only on (p̃, candidate) and sampler seeds only on
// (p̃, R, candidate), so cells along the ε axis share random numbers.
inline std::uint64_t projection_seed(std::uint64_t seed, std::size_t p_tilde, std::size_t k) {
  return derive_seed(derive_seed(derive_seed(seed, 0x9a0), p_tilde), k);
}

inline std::uint64_t sampler_seed(std::uint64_t seed, std::size_t p_tilde, double radius,
                                  std::size_t k) {
  const std::uint64_t r_bits = std::bit_cast<std::uint64_t>(radius);
  return derive_seed(derive_seed(derive_seed(derive_seed(seed, 0x5a3), p_tilde), r_bits), k);
}

inline SensitivityReport cell_sensitivity(const FinetuneContext& ctx, double radius) {
  return sensitivity({ctx.cfg.loss, ctx.data.finetune.size(), radius, ctx.jac_bound,
                      ctx.err_bound, ctx.cfg.mechanism.inflation});
}

inline CellOutcome run_cell(const FinetuneContext& ctx, const SweepCell& cell) {
  const RunConfig& cfg = ctx.cfg;
  const std::size_t n = cfg.eval.n_candidate_samples;
  const SensitivityReport report = cell_sensitivity(ctx, cell.radius);
  std::vector<double> values;
  values.reserve(n);
  std::size_t n_gibbs = 0;
  std::vector<double> rejection_rates;
  double mu_norm_sum = 0.0;
  nlohmann::json first_diag;

  auto record = [&](const MechanismRun& run) {
    if (first_diag.is_null()) first_diag = to_json(run.diagnostics);
    if (run.diagnostics.sampler == SamplerKind::Gibbs) ++n_gibbs;
    if (run.diagnostics.rejection_rate) rejection_rates.push_back(*run.diagnostics.rejection_rate);
    mu_norm_sum += run.diagnostics.mu_norm;
  };

  std::size_t runs = 0;
  if (ctx.per_model && cell.p_tilde != 0) {
    for (std::size_t k = 0; k < n; ++k) {
      const ProjectionBundle proj =
          stiefel_sample(ctx.p, cell.p_tilde, projection_seed(cfg.seed, cell.p_tilde, k));
      const CurvatureBundle bundle = project_bundle(*ctx.full, proj.a);
      const MechanismConfig mc =
          mechanism_config(cfg.mechanism, cell.epsilon, report.delta_u, cell.radius,
                           sampler_seed(cfg.seed, cell.p_tilde, cell.radius, k));
      const MechanismRun run = sample_candidates(bundle, mc, cfg.mechanism.sampler, 1, report);
      record(run);
      ++runs;
      values.push_back(evaluate_metric(cfg.model, run.thetas[0], cfg.loss, ctx.data.test));
    }
  } else {
    const CurvatureBundle& bundle =
        cell.p_tilde == 0 ? *ctx.full : ctx.by_pt.at(cell.p_tilde);
    const MechanismConfig mc = mechanism_config(cfg.mechanism, cell.epsilon, report.delta_u,
                                                cell.radius,
                                                sampler_seed(cfg.seed, cell.p_tilde, cell.radius, 0));
    const MechanismRun run = sample_candidates(bundle, mc, cfg.mechanism.sampler, n, report);
    record(run);
    ++runs;
    for (const auto& theta : run.thetas)
      values.push_back(evaluate_metric(cfg.model, theta, cfg.loss, ctx.data.test));
  }

  CellOutcome out;
  out.row = summarize("expm_quad", cell.epsilon, cell.radius, cell.p_tilde, ctx.metric, values,
                      cfg.seed);
  out.diagnostics = {
      {"sweep", cfg.mechanism.sweeps[cell.sweep].name},
      {"epsilon", cell.epsilon},
      {"radius", cell.radius},
      {"p_tilde", cell.p_tilde},
      {"delta_u", report.delta_u},
      {"mechanism_runs", runs},
      {"gibbs_runs", n_gibbs},
      {"mean_rejection_rate",
       rejection_rates.empty() ? nlohmann::json(nullptr)
                               : nlohmann::json(stats::mean(rejection_rates))},
      {"mean_mu_norm", mu_norm_sum / static_cast<double>(runs)},
      {"first_run", first_diag}};
  out.done = true;
  return out;
}

inline FinetuneOutcome run_finetune(const RunConfig& cfg, const TaskData& data,
                                    const ParamVector& anchor,
                                    const std::function<void(const FinetuneOutcome&)>& flush = {}) {
  require(anchor.spec() == cfg.model, ErrorCode::SchemaMismatch,
          "checkpoint layout does not match the configured model");
  require(!cfg.mechanism.epsilons.empty(), ErrorCode::ConfigInvalid,
          "mechanism.epsilons must be nonempty");
  FinetuneContext ctx{cfg, data, anchor, 0, true, std::nullopt, {}, 0.0, 0.0, {}};
  ctx.p = anchor.size();
  ctx.metric = metric_name(data.test);
  const bool can_materialize = ctx.p <= kMaxMaterializedParams;
  switch (cfg.mechanism.projection) {
    case ProjectionMode::Auto: ctx.per_model = can_materialize; break;
    case ProjectionMode::PerModel: ctx.per_model = true; break;
    case ProjectionMode::PerCell: ctx.per_model = false; break;
  }
  require(!ctx.per_model || can_materialize, ErrorCode::DimensionCap,
          "per-model projections need p <= " + std::to_string(kMaxMaterializedParams));

  bool needs_full = ctx.per_model;
  std::vector<std::size_t> cell_pts;
  for (const auto& sw : cfg.mechanism.sweeps)
    for (std::size_t pt : sw.p_tildes) {
      if (pt == 0) needs_full = true;
      else if (std::find(cell_pts.begin(), cell_pts.end(), pt) == cell_pts.end())
        cell_pts.push_back(pt);
    }
  if (needs_full) {
    require(can_materialize, ErrorCode::DimensionCap,
            "p_tilde = 0 (full space) needs p <= " + std::to_string(kMaxMaterializedParams));
    ctx.full = dataset_curvature(anchor, cfg.loss, data.finetune, cfg.mechanism.lambda);
  }
  if (!ctx.per_model) {
    for (std::size_t pt : cell_pts) {
      const ProjectionBundle proj = stiefel_sample(ctx.p, pt, projection_seed(cfg.seed, pt, 0));
      ctx.by_pt.emplace(pt, dataset_curvature(anchor, cfg.loss, data.finetune,
                                              cfg.mechanism.lambda, proj.a));
    }
  }
  ctx.jac_bound = empirical_jacobian_bound(anchor, data.finetune, cfg.mechanism.inflation);
  ctx.err_bound = cfg.loss.type == LossType::MS
                      ? empirical_error_bound(anchor, cfg.loss, data.finetune,
                                              cfg.mechanism.inflation)
                      : 0.0;

  FinetuneOutcome out;
  // Reference rows.
  {
    std::vector<double> zs{evaluate_metric(cfg.model, anchor.values(), cfg.loss, data.test)};
    out.reference_rows.push_back(summarize("zero_shot", std::numeric_limits<double>::infinity(),
                                           0.0, 0, ctx.metric, zs, cfg.seed));
    if (cfg.baselines.sgd) {
      const TrainResult tr = sgd_train(anchor, cfg.loss, data.finetune, *cfg.baselines.sgd);
      std::vector<double> v{evaluate_metric(cfg.model, tr.params.values(), cfg.loss, data.test)};
      out.reference_rows.push_back(summarize("sgd", std::numeric_limits<double>::infinity(),
                                             0.0, 0, ctx.metric, v, cfg.seed));
    }
  }

  // Sensitivity reports, one per distinct radius.
  {
    std::vector<double> radii;
    for (const auto& sw : cfg.mechanism.sweeps)
      for (double r : sw.radii)
        if (std::find(radii.begin(), radii.end(), r) == radii.end()) radii.push_back(r);
    for (double r : radii) out.sensitivity.push_back(to_json(cell_sensitivity(ctx, r)));
  }

  std::vector<SweepCell> cells;
  for (std::size_t s = 0; s < cfg.mechanism.sweeps.size(); ++s) {
    const auto& sw = cfg.mechanism.sweeps[s];
    for (double r : sw.radii)
      for (std::size_t pt : sw.p_tildes)
        for (double eps : cfg.mechanism.epsilons) cells.push_back({s, eps, r, pt});
  }

  // DP-SGD rows, one per ε, shared by every sweep.
  std::vector<ResultRow> dpsgd_rows;
  if (cfg.baselines.dpsgd) {
    const auto& eps_list = cfg.mechanism.epsilons;
    const std::size_t runs = cfg.baselines.dpsgd_runs;
    std::vector<double> values(eps_list.size() * runs);
    parallel_for(values.size(), [&](std::size_t idx) {
      DpsgdConfig dc = *cfg.baselines.dpsgd;
      dc.epsilon = eps_list[idx / runs];
      dc.seed = derive_seed(cfg.baselines.dpsgd->seed, idx % runs);
      const DpsgdResult r = dpsgd_train(anchor, cfg.loss, data.finetune, dc);
      values[idx] = evaluate_metric(cfg.model, r.params.values(), cfg.loss, data.test);
    });
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      std::vector<double> v(values.begin() + static_cast<std::ptrdiff_t>(e * runs),
                            values.begin() + static_cast<std::ptrdiff_t>((e + 1) * runs));
      dpsgd_rows.push_back(summarize("dpsgd", eps_list[e], 0.0, 0, ctx.metric, v, cfg.seed));
    }
  }

  std::vector<CellOutcome> results(cells.size());
  std::exception_ptr failure;
  try {
    parallel_for(cells.size(), [&](std::size_t i) { results[i] = run_cell(ctx, cells[i]); });
  } catch (...) {
    failure = std::current_exception();
  }

  for (std::size_t s = 0; s < cfg.mechanism.sweeps.size(); ++s) {
    auto& rows = out.rows_by_sweep[cfg.mechanism.sweeps[s].name];
    rows = out.reference_rows;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].sweep == s && results[i].done) rows.push_back(results[i].row);
    rows.insert(rows.end(), dpsgd_rows.begin(), dpsgd_rows.end());
  }
  for (const auto& r : results)
    if (r.done) out.diagnostics.push_back(r.diagnostics);
  if (failure) {
    if (flush) flush(out);  // partial results before the error propagates
    std::rethrow_exception(failure);
  }
  return out;
}

inline std::filesystem::path sweep_csv_path(const std::filesystem::path& dir,
                                            const std::string& sweep) {
  return dir / ("results_" + sweep + ".csv");
}

inline void write_finetune_outputs(const FinetuneOutcome& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, rows] : out.rows_by_sweep)
    write_text(sweep_csv_path(dir, name), results_csv(rows));
  write_text(dir / "diagnostics.json", out.diagnostics.dump(2) + "\n");
}

// Loads the checkpoint, runs the sweep and writes results_<sweep>.csv,
// diagnostics.json and manifest.json into out_dir.
inline FinetuneOutcome cmd_finetune(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                                    const std::filesystem::path& out_dir) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const TaskData data = load_task_data(cfg);
  FinetuneOutcome out = run_finetune(cfg, data, ck.params, [&](const FinetuneOutcome& partial) {
    write_finetune_outputs(partial, out_dir);
  });
  write_finetune_outputs(out, out_dir);

  nlohmann::json inputs = nlohmann::json::object();
  const std::string config_text = cfg.source.dump();
  inputs["config"] = git_blob_hash(config_text);
  inputs["checkpoint"] = git_blob_hash(read_bytes(checkpoint));
  for (const auto& f : data.files) inputs[f.filename().string()] = git_blob_hash(read_bytes(f));
  nlohmann::json outputs = nlohmann::json::object();
  for (const auto& [name, rows] : out.rows_by_sweep)
    outputs[sweep_csv_path({}, name).string()] = git_blob_hash(results_csv(rows));
  const nlohmann::json manifest = {{"config", cfg.source},
                                   {"seed", cfg.seed},
                                   {"task", std::string(task_name(cfg.task))},
                                   {"p", ck.params.size()},
                                   {"sensitivity", out.sensitivity},
                                   {"diagnostics_file", "diagnostics.json"},
                                   {"input_hashes", inputs},
                                   {"inputs_hash", git_blob_hash(inputs.dump())},
                                   {"output_hashes", outputs}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return out;
}

}  // namespace quadmech
