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

// JSON run configuration shared by the CLI subcommands.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "quadmech/baselines.hpp"
#include "quadmech/checkpoint.hpp"
#include "quadmech/error.hpp"
#include "quadmech/loss.hpp"
#include "quadmech/mechanism.hpp"
#include "quadmech/model.hpp"
#include "quadmech/sinusoidal.hpp"

namespace quadmech {

enum class TaskKind { Sinusoidal, Mnist, Tabular };

inline std::string_view task_name(TaskKind t) {
  switch (t) {
    case TaskKind::Sinusoidal: return "sinusoidal";
    case TaskKind::Mnist: return "mnist";
    case TaskKind::Tabular: return "tabular";
  }
  return "?";
}

inline TaskKind parse_task(std::string_view s) {
  if (s == "sinusoidal") return TaskKind::Sinusoidal;
  if (s == "mnist") return TaskKind::Mnist;
  if (s == "tabular") return TaskKind::Tabular;
  fail(ErrorCode::ConfigInvalid, "unknown task '" + std::string(s) + "'");
}

struct DataConfig {
  // sinusoidal
  std::size_t n_pretrain = 5000;
  std::size_t n_finetune = 5000;
  std::size_t n_test = 2000;
  ShiftMode shift_mode = ShiftMode::Input;
  // mnist: one IDX pair split into pretrain / finetune / test
  std::string images;
  std::string labels;
  double noise_std = 0.5;
  double norm_mean = 0.1307;
  double norm_std = 0.3081;
  // tabular
  std::string pretrain_csv;
  std::string finetune_csv;
  std::string test_csv;
};

struct PretrainConfig {
  SgdConfig sgd;
  double init_scale = 1.0;
};

enum class SamplerChoice { Auto, Rejection, Gibbs };

// Per-model draws a fresh projection for every candidate model; per-cell
// shares one projection per p̃ value (required when the p x p Gauss-Newton
// matrix is too large to form).
enum class ProjectionMode { Auto, PerModel, PerCell };

struct SweepSpec {
  std::string name;
  std::vector<double> radii;
  std::vector<std::size_t> p_tildes;  // 0 means the full parameter space
};

struct MechanismSweepConfig {
  double lambda = 0.0;
  double inflation = 1.1;
  std::vector<double> epsilons;
  std::vector<SweepSpec> sweeps;
  SamplerChoice sampler = SamplerChoice::Auto;
  std::size_t gibbs_burn_in = 500;
  std::size_t gibbs_thin = 5;
  std::size_t max_rejection_proposals = 100'000;
  ProjectionMode projection = ProjectionMode::Auto;
};

struct BaselineConfig {
  std::optional<SgdConfig> sgd;
  std::optional<DpsgdConfig> dpsgd;  // epsilon is replaced by each sweep ε
  std::size_t dpsgd_runs = 3;
};

struct EvalConfig {
  std::size_t n_candidate_samples = 500;
};

struct RunConfig {
  TaskKind task = TaskKind::Sinusoidal;
  ModelSpec model;
  LossKind loss = LossKind::ms(1);
  DataConfig data;
  PretrainConfig pretrain;
  MechanismSweepConfig mechanism;
  BaselineConfig baselines;
  EvalConfig eval;
  nlohmann::json audit = nlohmann::json::object();
  std::string output_dir = "runs/out";
  std::uint64_t seed = 0;
  nlohmann::json source;  // the parsed document, kept for the manifest
  std::filesystem::path base_dir;  // relative data paths resolve against this

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
};

namespace detail {

inline SgdConfig parse_sgd(const nlohmann::json& j, std::uint64_t default_seed) {
  SgdConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", default_seed);
  c.schedule = parse_lr_schedule(j.value("schedule", std::string("constant")));
  c.validate();
  return c;
}

inline DpsgdConfig parse_dpsgd(const nlohmann::json& j, std::uint64_t default_seed) {
  DpsgdConfig c;
  c.epsilon = j.value("epsilon", c.epsilon);
  c.delta = j.value("delta", c.delta);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", default_seed);
  if (j.contains("sigma_override") && !j["sigma_override"].is_null())
    c.sigma_override = j["sigma_override"].get<double>();
  c.validate();
  return c;
}

inline SamplerChoice parse_sampler_choice(std::string_view s) {
  if (s == "auto") return SamplerChoice::Auto;
  if (s == "rejection") return SamplerChoice::Rejection;
  if (s == "gibbs") return SamplerChoice::Gibbs;
  fail(ErrorCode::ConfigInvalid, "unknown sampler '" + std::string(s) + "'");
}

inline ProjectionMode parse_projection_mode(std::string_view s) {
  if (s == "auto") return ProjectionMode::Auto;
  if (s == "per_model") return ProjectionMode::PerModel;
  if (s == "per_cell") return ProjectionMode::PerCell;
  fail(ErrorCode::ConfigInvalid, "unknown projection mode '" + std::string(s) + "'");
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.source = j;
    c.task = parse_task(j.at("task").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = j.value("output_dir", c.output_dir);
    c.model = spec_from_json(j.at("model"));
    const std::string loss = j.value("loss", std::string("ms"));
    c.loss = parse_loss(loss) == LossType::MS ? LossKind::ms(c.model.output_dim)
                                               : LossKind::ce(c.model.output_dim);

    const auto& d = j.value("data", nlohmann::json::object());
    c.data.n_pretrain = d.value("n_pretrain", c.data.n_pretrain);
    c.data.n_finetune = d.value("n_finetune", c.data.n_finetune);
    c.data.n_test = d.value("n_test", c.data.n_test);
    c.data.shift_mode = parse_shift_mode(d.value("shift_mode", std::string("input")));
    c.data.images = d.value("images", std::string{});
    c.data.labels = d.value("labels", std::string{});
    c.data.noise_std = d.value("noise_std", c.data.noise_std);
    c.data.norm_mean = d.value("norm_mean", c.data.norm_mean);
    c.data.norm_std = d.value("norm_std", c.data.norm_std);
    c.data.pretrain_csv = d.value("pretrain_csv", std::string{});
    c.data.finetune_csv = d.value("finetune_csv", std::string{});
    c.data.test_csv = d.value("test_csv", std::string{});

    const auto& pt = j.value("pretrain", nlohmann::json::object());
    c.pretrain.sgd = detail::parse_sgd(pt, derive_seed(c.seed, 4));
    c.pretrain.init_scale = pt.value("init_scale", c.pretrain.init_scale);

    const auto& m = j.value("mechanism", nlohmann::json::object());
    c.mechanism.lambda = m.value("lambda", c.mechanism.lambda);
    c.mechanism.inflation = m.value("inflation", c.mechanism.inflation);
    c.mechanism.epsilons = m.value("epsilons", std::vector<double>{});
    c.mechanism.sampler = detail::parse_sampler_choice(m.value("sampler", std::string("auto")));
    c.mechanism.gibbs_burn_in = m.value("gibbs_burn_in", c.mechanism.gibbs_burn_in);
    c.mechanism.gibbs_thin = m.value("gibbs_thin", c.mechanism.gibbs_thin);
    c.mechanism.max_rejection_proposals =
        m.value("max_rejection_proposals", c.mechanism.max_rejection_proposals);
    c.mechanism.projection =
        detail::parse_projection_mode(m.value("projection", std::string("auto")));
    for (const auto& s : m.value("sweeps", nlohmann::json::array())) {
      SweepSpec sw;
      sw.name = s.at("name").get<std::string>();
      sw.radii = s.at("radii").get<std::vector<double>>();
      sw.p_tildes = s.at("p_tildes").get<std::vector<std::size_t>>();
      c.mechanism.sweeps.push_back(std::move(sw));
    }

    const auto& b = j.value("baselines", nlohmann::json::object());
    if (b.contains("sgd") && !b["sgd"].is_null())
      c.baselines.sgd = detail::parse_sgd(b["sgd"], derive_seed(c.seed, 6));
    if (b.contains("dpsgd") && !b["dpsgd"].is_null())
      c.baselines.dpsgd = detail::parse_dpsgd(b["dpsgd"], derive_seed(c.seed, 7));
    c.baselines.dpsgd_runs = b.value("dpsgd_runs", c.baselines.dpsgd_runs);

    const auto& e = j.value("eval", nlohmann::json::object());
    c.eval.n_candidate_samples = e.value("n_candidate_samples", c.eval.n_candidate_samples);
    c.audit = j.value("audit", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) throw;
    fail(ErrorCode::ConfigInvalid, e.what());
  }

  require(c.eval.n_candidate_samples >= 1, ErrorCode::ConfigInvalid,
          "eval.n_candidate_samples must be >= 1");
  for (double eps : c.mechanism.epsilons)
    require(eps > 0.0, ErrorCode::ConfigInvalid, "epsilons must be positive");
  require(c.mechanism.lambda >= 0.0, ErrorCode::ConfigInvalid, "lambda must be >= 0");
  require(c.mechanism.inflation >= 1.0, ErrorCode::ConfigInvalid, "inflation must be >= 1");
  require(c.mechanism.gibbs_thin >= 1, ErrorCode::ConfigInvalid, "gibbs_thin must be >= 1");
  require(c.baselines.dpsgd_runs >= 1, ErrorCode::ConfigInvalid, "dpsgd_runs must be >= 1");
  for (const auto& sw : c.mechanism.sweeps) {
    require(!sw.radii.empty() && !sw.p_tildes.empty(), ErrorCode::ConfigInvalid,
            "sweep '" + sw.name + "' needs radii and p_tildes");
    for (double r : sw.radii)
      require(r > 0.0, ErrorCode::ConfigInvalid, "radii must be positive");
    for (std::size_t pt : sw.p_tildes)
      require(pt <= c.model.param_count(), ErrorCode::ConfigInvalid,
              "p_tilde " + std::to_string(pt) + " exceeds p=" +
                  std::to_string(c.model.param_count()));
  }
  if (c.task == TaskKind::Sinusoidal)
    require(c.model.input_dim == kSinusoidalInputDim && c.model.output_dim == 1,
            ErrorCode::ConfigInvalid, "sinusoidal task needs a 5 -> 1 model");
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "config not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
  RunConfig c = parse_run_config(j);
  c.base_dir = path.parent_path();
  return c;
}

}  // namespace quadmech
