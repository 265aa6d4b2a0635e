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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densecap/eval/dense_eval.hpp"
#include "densecap/model/config.hpp"
#include "densecap/synth/synthdata.hpp"
#include "densecap/train/trainer.hpp"

namespace densecap::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kDivergence = 3 };

constexpr std::uint32_t kReportFormatVersion = 1;

/// Merged configuration of one run. The seed drives both the corpus and the
/// trainer.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path dataset = "data/synth";
  std::filesystem::path output = "runs/default";
  synth::CorpusConfig synth;
  ModelConfig model;
  train::TrainConfig train;
  train::InferenceOptions infer;
  // Allows inference from spn or captioner checkpoints.
  bool allow_pretrain = false;
  eval::DenseEvalOptions eval;
  std::size_t max_proposals = 100;
  // Training steps between checkpoint saves; 0 saves only at the end.
  std::size_t save_every = 0;

  nlohmann::json snapshot() const;
};

nlohmann::json default_config();
// Reads a JSON config file; DataError with line and column on parse errors.
nlohmann::json load_config(const std::filesystem::path& path);
// "a.b.c=value": value is parsed as JSON and taken as a string otherwise.
// ContractError for malformed assignments or unknown keys.
void apply_override(nlohmann::json& tree, const std::string& assignment);
// Merges the tree over the defaults; unknown keys and invalid values are
// ContractErrors.
RunConfig resolve(const nlohmann::json& tree);

void cmd_generate(const RunConfig& config);
// Stage "spn", "captioner" or "joint". max_steps bounds this invocation.
void cmd_train(const std::string& stage, const RunConfig& config, bool resume,
               std::size_t max_steps = SIZE_MAX);
void cmd_infer(const RunConfig& config, const std::filesystem::path& checkpoint,
               const std::filesystem::path& out);
void cmd_eval(const std::string& mode, const RunConfig& config, const std::filesystem::path& predictions,
              const std::filesystem::path& ground_truth, const std::filesystem::path& out_prefix);
nlohmann::json inspect_checkpoint(const std::filesystem::path& path);

// Parses arguments, runs the command and maps failures to exit codes.
int run(int argc, char** argv);

}  // namespace densecap::cli
