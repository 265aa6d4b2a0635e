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

#include <optional>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "densecap/cli/cli.hpp"
#include "densecap/errors.hpp"
#include "densecap/util/io.hpp"

namespace densecap::cli {

namespace fs = std::filesystem;
using train::Checkpoint;
using train::Stage;

namespace {

fs::path checkpoint_path(const RunConfig& c, const std::string& stage) {
  return c.output / (stage + ".ckpt");
}

Checkpoint require_checkpoint(const RunConfig& c, const std::string& stage, const std::string& needed_by) {
  const fs::path p = checkpoint_path(c, stage);
  if (!fs::exists(p)) {
    throw DataError(needed_by + " needs " + p.string() + "; run `train " + stage + "` first");
  }
  Checkpoint ck = train::load_checkpoint(p);
  if (!ck.complete || to_string(ck.stage) != stage) {
    throw DataError(p.string() + " is not a finished " + stage + " checkpoint (stage " +
                    to_string(ck.stage) + ", step " + std::to_string(ck.step) + ")");
  }
  return ck;
}

void require_same_model(const RunConfig& c, const Checkpoint& ck, const std::string& what) {
  if (nlohmann::json(c.model) != nlohmann::json(ck.model)) {
    throw ContractError("model section of the config differs from the one stored in " + what);
  }
}

// Every caption word must be known to the checkpoint's vocabulary.
void require_vocab_covers(const Vocabulary& vocab, const std::vector<synth::VideoRecord>& videos) {
  std::set<std::string> missing;
  for (const auto& v : videos) {
    for (const auto& c : v.captions) {
      for (const auto& w : c) {
        if (!vocab.contains(w)) missing.insert(w);
      }
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& w : missing) list += (list.empty() ? "" : ", ") + w;
    throw DataError("dataset words missing from the checkpoint vocabulary: " + list);
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

// Rows of an existing log with step < keep_below, header included.
std::string kept_log(const fs::path& path, std::size_t keep_below) {
  std::string out = train::log_header();
  if (!fs::exists(path)) return out;
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) continue;
    if (std::stoull(line.substr(a + 1, b - a - 1)) < keep_below) out += line + "\n";
  }
  return out;
}

train::RunControl progress(std::size_t max_steps) {
  train::RunControl control;
  control.max_steps = max_steps;
  control.on_step = [](const train::LogRow& r) {
    if (r.step % 50 == 0) {
      spdlog::info("{} step {}: L_spn {:.5f} L_caption {:.5f} L_total {:.5f}", r.stage, r.step, r.spn,
                   r.caption, r.total);
    }
  };
  return control;
}

}  // namespace

void cmd_generate(const RunConfig& config) {
  const synth::AuditReport report = synth::generate(config.synth, config.dataset);
  spdlog::info("wrote {} videos to {} ({} captions, {:.0f}% history-dependent)", config.synth.videos,
               config.dataset.string(), report.captions, 100.0 * report.history_fraction());
}

void cmd_train(const std::string& stage_name, const RunConfig& config, bool resume, std::size_t max_steps) {
  const Stage stage = train::stage_from_string(stage_name);
  if (stage == Stage::init) throw ContractError("train: stage must be spn, captioner or joint");
  const fs::path out = checkpoint_path(config, stage_name);

  std::optional<Checkpoint> previous;
  if (resume && fs::exists(out)) {
    previous = train::load_checkpoint(out);
    if (previous->stage != stage) {
      throw DataError(out.string() + " holds a " + to_string(previous->stage) + " checkpoint");
    }
    require_same_model(config, *previous, out.string());
    if (previous->complete) {
      spdlog::info("{} is already complete at step {}", out.string(), previous->step);
      return;
    }
    spdlog::info("resuming {} from step {}", stage_name, previous->step);
  }

  // Everything is loaded before any training, so missing inputs fail fast.
  const synth::Dataset data = synth::load_dataset(config.dataset);
  std::optional<Checkpoint> spn, captioner;
  train::FeatureDump dump;
  Vocabulary vocab;
  if (stage == Stage::spn) {
    vocab = previous ? previous->vocab : train::build_vocabulary(data.videos);
  } else {
    spn = require_checkpoint(config, "spn", "train " + stage_name);
    require_same_model(config, *spn, checkpoint_path(config, "spn").string());
    vocab = spn->vocab;
    if (stage == Stage::joint) {
      captioner = require_checkpoint(config, "captioner", "train joint");
      require_same_model(config, *captioner, checkpoint_path(config, "captioner").string());
    }
  }
  require_vocab_covers(vocab, data.videos);
  const auto videos = train::prepare(data.videos, vocab, config.model);
  if (stage == Stage::captioner) {
    dump = train::extract_gt_features(*spn, videos);
    train::save_feature_dump(config.output / "features.bin", dump);
  }

  Checkpoint ck = previous ? *previous
                           : (stage == Stage::spn ? train::initial_checkpoint(config.model, vocab, config.train)
                                                  : Checkpoint{});
  const std::size_t first_step = previous ? previous->step : 0;
  const fs::path log_path = config.output / (stage_name + "_log.csv");
  std::string log = kept_log(log_path, first_step);
  const nlohmann::json snapshot = config.snapshot();
  write_json(config.output / (stage_name + "_config.json"), snapshot);

  std::size_t budget = max_steps;
  bool started = previous.has_value();
  while (budget > 0) {
    const std::size_t chunk = config.save_every == 0 ? budget : std::min(budget, config.save_every);
    const train::RunControl control = progress(chunk);
    train::StageResult res;
    switch (stage) {
      case Stage::spn:
        res = train::pretrain_spn(videos, ck, config.train, control);
        break;
      case Stage::captioner:
        res = train::pretrain_captioner(dump, started ? ck : *spn, config.train, control);
        break;
      default:
        res = train::train_joint(videos, *spn, *captioner, config.train, control, started ? &ck : nullptr);
        break;
    }
    started = true;
    ck = std::move(res.checkpoint);
    ck.run_config = snapshot;
    for (const auto& row : res.log) log += train::to_csv(row);
    train::save_checkpoint(out, ck);
    write_file_atomic(log_path, log);
    budget -= std::min(budget, res.log.size());
    if (ck.complete || res.log.empty()) break;
  }
  spdlog::info("{}: step {}{} -> {}", stage_name, ck.step, ck.complete ? " (complete)" : "", out.string());
}

void cmd_infer(const RunConfig& config, const fs::path& checkpoint, const fs::path& out) {
  const Checkpoint ck = train::load_checkpoint(checkpoint);
  if (ck.stage == Stage::init) throw ContractError("infer: " + checkpoint.string() + " is untrained");
  if (ck.stage != Stage::joint && !config.allow_pretrain) {
    throw ContractError("infer: " + checkpoint.string() + " is a " + to_string(ck.stage) +
                        " checkpoint; set infer.allow_pretrain to use it");
  }
  const synth::Dataset data = synth::load_dataset(config.dataset);
  require_vocab_covers(ck.vocab, data.videos);
  const auto videos = train::prepare(data.videos, ck.vocab, ck.model);
  const train::Model model = train::model_from(ck);
  nlohmann::json j = eval::to_json(train::infer(model, videos, config.infer));
  j["format_version"] = kReportFormatVersion;
  j["checkpoint"] = {{"stage", to_string(ck.stage)}, {"step", ck.step}};
  j["config"] = config.snapshot();
  write_json(out, j);
  spdlog::info("wrote predictions for {} videos to {}", videos.size(), out.string());
}

void cmd_eval(const std::string& mode, const RunConfig& config, const fs::path& predictions,
              const fs::path& ground_truth, const fs::path& out_prefix) {
  if (mode != "proposals" && mode != "captions") {
    throw ContractError("eval: mode must be proposals or captions, got " + mode);
  }
  const eval::PredictionSet preds = eval::load_predictions(predictions);
  const eval::GroundTruth gts = eval::load_ground_truth(ground_truth);
  if (preds.empty()) spdlog::warn("{} has no predictions; every score is 0", predictions.string());
  nlohmann::json report;
  std::string csv;
  if (mode == "proposals") {
    const eval::ProposalReport r = eval::evaluate_proposals(preds, gts, config.max_proposals);
    report = eval::to_json(r);
    csv = eval::to_csv(r);
  } else {
    const eval::CaptionReport r = eval::dense_caption_eval(preds, gts, config.eval);
    report = eval::to_json(r);
    csv = eval::to_csv(r);
  }
  nlohmann::json j = {{"format_version", kReportFormatVersion},
                      {"mode", mode},
                      {"predictions", predictions.string()},
                      {"ground_truth", ground_truth.string()},
                      {"report", report},
                      {"config", config.snapshot()}};
  write_json(fs::path(out_prefix.string() + ".json"), j);
  write_file_atomic(fs::path(out_prefix.string() + ".csv"), csv);
  spdlog::info("wrote {}.json and {}.csv", out_prefix.string(), out_prefix.string());
}

nlohmann::json inspect_checkpoint(const fs::path& path) {
  const Checkpoint ck = train::load_checkpoint(path);
  nlohmann::json tensors = nlohmann::json::object();
  std::size_t values = 0;
  for (const auto& [n, t] : ck.params) {
    tensors[n] = t.shape();
    values += t.numel();
  }
  return {{"format_version", Checkpoint::kFormatVersion},
          {"stage", to_string(ck.stage)},
          {"step", ck.step},
          {"complete", ck.complete},
          {"model", ck.model},
          {"train", ck.train},
          {"vocabulary_size", ck.vocab.size()},
          {"parameter_values", values},
          {"parameters", tensors},
          {"momentum_tensors", ck.momentum.size()},
          {"run_config", ck.run_config}};
}

}  // namespace densecap::cli
