// Copyright 2026 The densecap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "densecap/cli/cli.hpp"
#include "densecap/errors.hpp"

namespace densecap::cli {

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::string output;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_file, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", c.overrides, "Override a config value, e.g. train.lambda=0.5");
  cmd->add_option("--seed", c.seed, "Seed for corpus generation and training");
  cmd->add_option("--dataset", c.dataset, "Dataset directory");
  cmd->add_option("-o,--output", c.output, "Run directory for checkpoints and logs");
  cmd->add_flag("-v,--verbose", c.verbose, "Debug logging");
}

// Flags win over the config file.
RunConfig build(const Common& c) {
  nlohmann::json tree = c.config_file.empty() ? nlohmann::json::object() : load_config(c.config_file);
  for (const auto& o : c.overrides) apply_override(tree, o);
  if (c.seed) tree["seed"] = *c.seed;
  if (!c.dataset.empty()) tree["dataset"] = c.dataset;
  if (!c.output.empty()) tree["output"] = c.output;
  return resolve(tree);
}

}  // namespace

int run(int argc, char** argv) {
  if (!spdlog::get("densecap")) spdlog::set_default_logger(spdlog::stderr_color_st("densecap"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Dense video event detection and captioning"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("generate", "Generate the synthetic captioned-video dataset");
  add_common(gen, common);

  std::string stage;
  bool resume = false;
  std::size_t max_steps = SIZE_MAX;
  auto* tr = app.add_subcommand("train", "Run one training stage");
  tr->add_option("stage", stage, "spn, captioner or joint")
      ->required()
      ->check(CLI::IsMember({"spn", "captioner", "joint"}));
  tr->add_flag("--resume", resume, "Continue an unfinished checkpoint of this stage");
  tr->add_option("--max-steps", max_steps, "Stop after this many steps");
  add_common(tr, common);

  std::string checkpoint, predictions_out;
  auto* inf = app.add_subcommand("infer", "Detect and caption events");
  inf->add_option("--checkpoint", checkpoint, "Checkpoint (default <output>/joint.ckpt)");
  inf->add_option("--predictions", predictions_out, "Output file (default <output>/predictions.json)");
  add_common(inf, common);

  std::string mode, predictions_in, gt, report_prefix;
  auto* ev = app.add_subcommand("eval", "Score predictions against ground truth");
  ev->add_option("mode", mode, "proposals or captions")
      ->required()
      ->check(CLI::IsMember({"proposals", "captions"}));
  ev->add_option("--predictions", predictions_in, "Predictions JSON (default <output>/predictions.json)");
  ev->add_option("--ground-truth", gt, "Ground truth JSON (default <dataset>/annotations.json)");
  ev->add_option("--report", report_prefix, "Report path without extension (default <output>/eval_<mode>)");
  add_common(ev, common);

  std::string inspect_path;
  auto* ins = app.add_subcommand("inspect-checkpoint", "Print a checkpoint summary as JSON");
  ins->add_option("checkpoint", inspect_path, "Checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (common.verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*ins) {
      std::cout << inspect_checkpoint(inspect_path).dump(2) << "\n";
      return kOk;
    }
    const RunConfig config = build(common);
    if (*gen) {
      cmd_generate(config);
    } else if (*tr) {
      cmd_train(stage, config, resume, max_steps);
    } else if (*inf) {
      cmd_infer(config, checkpoint.empty() ? config.output / "joint.ckpt" : std::filesystem::path(checkpoint),
                predictions_out.empty() ? config.output / "predictions.json"
                                        : std::filesystem::path(predictions_out));
    } else if (*ev) {
      cmd_eval(mode, config,
               predictions_in.empty() ? config.output / "predictions.json" : std::filesystem::path(predictions_in),
               gt.empty() ? config.dataset / "annotations.json" : std::filesystem::path(gt),
               report_prefix.empty() ? config.output / ("eval_" + mode) : std::filesystem::path(report_prefix));
    }
    return kOk;
  } catch (const ContractError& e) {
    spdlog::error("{}", e.what());
    return kUsage;
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kDivergence;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kDataError;
  }
}

}  // namespace densecap::cli
