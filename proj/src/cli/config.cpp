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

#include "densecap/cli/cli.hpp"
#include "densecap/errors.hpp"

namespace densecap::cli {

namespace {

nlohmann::json eval_json(const RunConfig& c) {
  return {{"thresholds", c.eval.thresholds},
          {"top_k", c.eval.top_k},
          {"count_unmatched", c.eval.count_unmatched},
          {"max_proposals", c.max_proposals}};
}

// Every key of `tree` must exist in `reference`, recursively through objects.
void check_known(const nlohmann::json& reference, const nlohmann::json& tree, const std::string& path) {
  if (!tree.is_object()) throw ContractError("config: " + (path.empty() ? "root" : path) + " must be an object");
  for (const auto& [key, value] : tree.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!reference.contains(key)) throw ContractError("config: unknown key " + here);
    if (reference[key].is_object()) check_known(reference[key], value, here);
  }
}

}  // namespace

nlohmann::json RunConfig::snapshot() const {
  return {{"seed", seed},
          {"dataset", dataset.string()},
          {"output", output.string()},
          {"synth", synth},
          {"model", model},
          {"train", train},
          {"infer",
           {{"nms_threshold", infer.nms_threshold},
            {"top_k", infer.top_k},
            {"allow_pretrain", allow_pretrain}}},
          {"eval", eval_json(*this)},
          {"save_every", save_every}};
}

nlohmann::json default_config() { return RunConfig{}.snapshot(); }

nlohmann::json load_config(const std::filesystem::path& path) { return eval::read_json_file(path); }

void apply_override(nlohmann::json& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ContractError("override '" + assignment + "' is not of the form key.path=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const nlohmann::json defaults = default_config();
  const nlohmann::json* ref = &defaults;
  nlohmann::json* node = &tree;
  std::size_t begin = 0;
  while (true) {
    const auto dot = key.find('.', begin);
    const std::string part = key.substr(begin, dot == std::string::npos ? std::string::npos : dot - begin);
    if (part.empty() || !ref->is_object() || !ref->contains(part)) {
      throw ContractError("override: unknown key " + key);
    }
    ref = &(*ref)[part];
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    begin = dot + 1;
  }
}

RunConfig resolve(const nlohmann::json& tree) {
  nlohmann::json merged = default_config();
  check_known(merged, tree, "");
  merged.merge_patch(tree);

  RunConfig c;
  try {
    c.seed = merged.at("seed").get<std::uint64_t>();
    c.dataset = merged.at("dataset").get<std::string>();
    c.output = merged.at("output").get<std::string>();
    c.synth = merged.at("synth").get<synth::CorpusConfig>();
    c.model = merged.at("model").get<ModelConfig>();
    c.train = merged.at("train").get<train::TrainConfig>();
    const auto& inf = merged.at("infer");
    c.infer.nms_threshold = inf.at("nms_threshold").get<double>();
    c.infer.top_k = inf.at("top_k").get<std::size_t>();
    c.allow_pretrain = inf.at("allow_pretrain").get<bool>();
    const auto& ev = merged.at("eval");
    c.eval.thresholds = ev.at("thresholds").get<std::vector<double>>();
    c.eval.top_k = ev.at("top_k").get<std::size_t>();
    c.eval.count_unmatched = ev.at("count_unmatched").get<bool>();
    c.max_proposals = ev.at("max_proposals").get<std::size_t>();
    c.save_every = merged.at("save_every").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  c.synth.seed = c.seed;
  c.train.seed = c.seed;
  c.train.validate();
  if (!(c.infer.nms_threshold > 0.0 && c.infer.nms_threshold <= 1.0)) {
    throw ContractError("config: infer.nms_threshold must be in (0, 1]");
  }
  if (c.infer.top_k == 0 || c.eval.top_k == 0 || c.max_proposals == 0) {
    throw ContractError("config: top_k and max_proposals must be positive");
  }
  if (c.eval.thresholds.empty()) throw ContractError("config: eval.thresholds is empty");
  return c;
}

}  // namespace densecap::cli
