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

// quadmech: pretrain | finetune | audit | report

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quadmech/quadmech.hpp"

namespace fs = std::filesystem;
using namespace quadmech;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required) {
  auto* opt = cmd->add_option("--config", a.config, "JSON run config");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", a.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", a.seed, "seed (overrides the config seed)");
}

// Applies --seed before parsing so every derived seed follows it, then --out.
RunConfig load_with_overrides(const CommonArgs& a) {
  std::ifstream in(a.config);
  require(static_cast<bool>(in), ErrorCode::DataMissing, "config not found: " + a.config);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigInvalid, a.config + ": " + e.what());
  }
  if (a.seed) j["seed"] = *a.seed;
  if (!a.out.empty()) j["output_dir"] = a.out;
  RunConfig cfg = parse_run_config(j);
  cfg.base_dir = fs::path(a.config).parent_path();
  return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path p(cfg.output_dir);
  return p;
}

int run_pretrain(const CommonArgs& a) {
  const RunConfig cfg = load_with_overrides(a);
  const fs::path out = output_dir(cfg);
  const PretrainOutcome r = cmd_pretrain(cfg, out);
  std::cout << "train_loss " << r.train_loss << "\n"
            << "zero_shot_finetune_loss " << r.zero_shot_finetune << "\n"
            << "zero_shot_test_loss " << r.zero_shot_test << "\n";
  if (r.metric == "accuracy")
    std::cout << "pretrain_accuracy " << r.metric_pretrain << "\n"
              << "zero_shot_test_accuracy " << r.metric_test << "\n";
  std::cout << "checkpoint " << (out / kCheckpointFile).string() << "\n";
  return 0;
}

int run_finetune(const CommonArgs& a, const std::string& checkpoint) {
  const RunConfig cfg = load_with_overrides(a);
  const fs::path out = output_dir(cfg);
  const fs::path ck = checkpoint.empty() ? out / kCheckpointFile : fs::path(checkpoint);
  const FinetuneOutcome r = cmd_finetune(cfg, ck, out);
  for (const auto& [name, rows] : r.rows_by_sweep)
    std::cout << sweep_csv_path(out, name).string() << " (" << rows.size() << " rows)\n";
  return 0;
}

int run_audit(const CommonArgs& a, bool broken) {
  nlohmann::json audit = nlohmann::json::object();
  std::uint64_t seed = a.seed.value_or(0);
  fs::path out = a.out.empty() ? fs::path("runs/audit") : fs::path(a.out);
  if (!a.config.empty()) {
    const RunConfig cfg = load_with_overrides(a);
    audit = cfg.audit;
    seed = cfg.seed;
    out = output_dir(cfg);
  }
  if (broken) audit["broken_sensitivity"] = true;
  fs::create_directories(out);
  const fs::path jsonl = out / "audit.jsonl";
  write_text(jsonl, "");
  const auto reports = run_audit_suite(audit, seed);
  append_jsonl(jsonl, reports);
  for (const auto& r : reports)
    std::cout << (r.vacuous ? "VACUOUS " : r.passed ? "PASS    " : "FAIL    ") << r.check_name
              << " statistic=" << r.statistic << " bound=" << r.bound << " slack=" << r.slack
              << "\n";
  return any_failed(reports) ? 1 : 0;
}

int run_report(const CommonArgs& a, std::vector<std::string> csvs) {
  fs::path out = a.out.empty() ? fs::path("report") : fs::path(a.out);
  if (!a.config.empty()) {
    const RunConfig cfg = load_with_overrides(a);
    out = output_dir(cfg);
    if (csvs.empty())
      for (const auto& sw : cfg.mechanism.sweeps)
        csvs.push_back(sweep_csv_path(out, sw.name).string());
  }
  require(!csvs.empty(), ErrorCode::ConfigInvalid, "report needs result CSVs or --config");
  std::vector<fs::path> paths(csvs.begin(), csvs.end());
  for (const auto& p : cmd_report(paths, out)) std::cout << p.string() << "\n";
  std::cout << read_bytes(out / "summary.md");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private fine-tuning with a quadratic-utility exponential mechanism"};
  app.require_subcommand(1);

  CommonArgs pre_args, ft_args, audit_args, report_args;
  std::string checkpoint;
  bool broken = false;
  std::vector<std::string> csvs;

  auto* pre = app.add_subcommand("pretrain", "train the base model and write a checkpoint");
  add_common(pre, pre_args, true);
  auto* ft = app.add_subcommand("finetune", "run the private fine-tuning sweep");
  add_common(ft, ft_args, true);
  ft->add_option("--checkpoint", checkpoint, "checkpoint (default <out>/checkpoint.bin)");
  auto* audit = app.add_subcommand("audit", "run the privacy and utility audits");
  add_common(audit, audit_args, false);
  audit->add_flag("--broken-sensitivity", broken, "halve the sensitivity bound (negative control)");
  auto* report = app.add_subcommand("report", "plot result CSVs as SVG");
  add_common(report, report_args, false);
  report->add_option("csv", csvs, "result CSVs");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pre) return run_pretrain(pre_args);
    if (*ft) return run_finetune(ft_args, checkpoint);
    if (*audit) return run_audit(audit_args, broken);
    if (*report) return run_report(report_args, csvs);
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
