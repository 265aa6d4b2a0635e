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

#include <cmath>

#include "densecap/util/io.hpp"
#include "internal.hpp"

namespace densecap::train {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ContractError("train config: " + m); };
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
  if (!(spn_lr > 0.0) || !(captioner_lr > 0.0)) fail("learning rates must be > 0");
  if (!(joint_decay > 0.0 && joint_decay < 1.0)) {
    fail("joint_decay must lie in (0, 1) so the joint rate stays below the pretrain rate");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(clip_norm > 0.0)) fail("clip_norm must be > 0");
  if (spn_batch == 0 || caption_batch == 0) fail("batch sizes must be >= 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lambda", c.lambda},
                     {"spn_lr", c.spn_lr},
                     {"captioner_lr", c.captioner_lr},
                     {"joint_decay", c.joint_decay},
                     {"momentum", c.momentum},
                     {"clip_norm", c.clip_norm},
                     {"spn_batch", c.spn_batch},
                     {"caption_batch", c.caption_batch},
                     {"spn_epochs", c.spn_epochs},
                     {"captioner_epochs", c.captioner_epochs},
                     {"joint_epochs", c.joint_epochs},
                     {"seed", c.seed},
                     {"freeze_encoder", c.freeze_encoder},
                     {"shuffle_captions", c.shuffle_captions}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  TrainConfig d;
  c.lambda = j.value("lambda", d.lambda);
  c.spn_lr = j.value("spn_lr", d.spn_lr);
  c.captioner_lr = j.value("captioner_lr", d.captioner_lr);
  c.joint_decay = j.value("joint_decay", d.joint_decay);
  c.momentum = j.value("momentum", d.momentum);
  c.clip_norm = j.value("clip_norm", d.clip_norm);
  c.spn_batch = j.value("spn_batch", d.spn_batch);
  c.caption_batch = j.value("caption_batch", d.caption_batch);
  c.spn_epochs = j.value("spn_epochs", d.spn_epochs);
  c.captioner_epochs = j.value("captioner_epochs", d.captioner_epochs);
  c.joint_epochs = j.value("joint_epochs", d.joint_epochs);
  c.seed = j.value("seed", d.seed);
  c.freeze_encoder = j.value("freeze_encoder", d.freeze_encoder);
  c.shuffle_captions = j.value("shuffle_captions", d.shuffle_captions);
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::init:
      return "init";
    case Stage::spn:
      return "spn";
    case Stage::captioner:
      return "captioner";
    case Stage::joint:
      return "joint";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (Stage st : {Stage::init, Stage::spn, Stage::captioner, Stage::joint}) {
    if (to_string(st) == s) return st;
  }
  throw DataError("unknown stage tag '" + s + "'");
}

Model::Model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed)
    : config_(config),
      vocab_(std::move(vocab)),
      params_(seed),
      encoder_(params_, config.encoder),
      spn_(params_, encoder_.feature_channels(), config.spn),
      head_(params_, encoder_.feature_channels(), config.soi),
      captioner_(params_, vocab_.size(), config.soi.fc_dim, config.captioner) {}

std::vector<std::string> Model::group(std::initializer_list<std::string_view> prefixes) const {
  std::vector<std::string> out;
  for (const auto& n : params_.names()) {
    for (auto p : prefixes) {
      if (std::string_view(n).substr(0, p.size()) == p) {
        out.push_back(n);
        break;
      }
    }
  }
  return out;
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw ShapeError("sgd_step: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

double clip_grad_norm(ad::ParamStore& params, const std::vector<std::string>& names, double max_norm) {
  double sq = 0.0;
  for (const auto& n : names) {
    for (double g : params.get(n).grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& n : names) {
      for (double& g : params.get(n).grad_mut()) g *= f;
    }
  }
  return norm;
}

namespace detail {

ad::Tensor& velocity(std::map<std::string, ad::Tensor>& momentum, const ad::ParamStore& params,
                     const std::string& name) {
  auto it = momentum.find(name);
  if (it == momentum.end()) {
    it = momentum.emplace(name, ad::Tensor(params.get(name).shape())).first;
  }
  return it->second;
}

}  // namespace detail

Checkpoint initial_checkpoint(const ModelConfig& model, const Vocabulary& vocab,
                              const TrainConfig& train) {
  train.validate();
  Checkpoint c;
  c.stage = Stage::init;
  c.model = model;
  c.train = train;
  c.vocab = vocab;
  Model m(model, vocab, train.seed);
  store_params(m, c);
  return c;
}

Checkpoint retarget(const Checkpoint& c, const ModelConfig& model) {
  Checkpoint out = c;
  out.model = model;
  out.momentum.clear();
  Model fresh(model, c.vocab, c.train.seed);
  store_params(fresh, out);
  for (auto& [n, t] : out.params) {
    auto it = c.params.find(n);
    if (it != c.params.end() && it->second.shape() == t.shape()) t = it->second.clone();
  }
  return out;
}

void store_params(const Model& model, Checkpoint& c) {
  c.params.clear();
  for (const auto& n : model.params().names()) c.params[n] = model.params().get(n).detach();
}

Model model_from(const Checkpoint& c) {
  Model m(c.model, c.vocab, c.train.seed);
  for (const auto& n : m.params().names()) {
    auto it = c.params.find(n);
    if (it == c.params.end()) throw DataError("checkpoint lacks parameter '" + n + "'");
    if (it->second.shape() != m.params().get(n).shape()) {
      throw DataError("checkpoint parameter '" + n + "' has shape " + ad::to_string(it->second.shape()) +
                      ", model expects " + ad::to_string(m.params().get(n).shape()));
    }
    std::copy(it->second.values().begin(), it->second.values().end(),
              m.params().get(n).values_mut().begin());
  }
  return m;
}

namespace {

void put_tensor(detail::Writer& w, const std::string& name, const ad::Tensor& t) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
  w.doubles(t.values());
}

constexpr char kCheckpointMagic[] = "JEDN";
const std::string kMomentumPrefix = "momentum/";

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  nlohmann::json meta{{"stage", to_string(c.stage)},
                      {"step", c.step},
                      {"complete", c.complete},
                      {"model", c.model},
                      {"train", c.train},
                      {"vocab", c.vocab.words()},
                      {"run_config", c.run_config}};
  const std::string blob = meta.dump();
  detail::Writer w;
  w.bytes(std::string(kCheckpointMagic, 4));
  w.put<std::uint32_t>(Checkpoint::kFormatVersion);
  w.put<std::uint64_t>(blob.size());
  w.bytes(blob);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.params.size() + c.momentum.size()));
  for (const auto& [n, t] : c.params) put_tensor(w, n, t);
  for (const auto& [n, t] : c.momentum) put_tensor(w, kMomentumPrefix + n, t);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  detail::Reader r(bytes, source);
  if (r.bytes(4) != std::string(kCheckpointMagic, 4)) r.fail("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != Checkpoint::kFormatVersion) r.fail("unsupported format version " + std::to_string(version));
  const auto len = r.get<std::uint64_t>();
  Checkpoint c;
  try {
    const auto meta = nlohmann::json::parse(r.bytes(len));
    c.stage = stage_from_string(meta.at("stage").get<std::string>());
    c.step = meta.at("step").get<std::size_t>();
    c.complete = meta.at("complete").get<bool>();
    c.model = meta.at("model").get<ModelConfig>();
    c.train = meta.at("train").get<TrainConfig>();
    c.vocab = Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
    c.run_config = meta.value("run_config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad config blob: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.bytes(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail("tensor '" + name + "' has rank " + std::to_string(rank));
    ad::Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    ad::Tensor t(shape, r.doubles(ad::numel(shape)));
    if (name.rfind(kMomentumPrefix, 0) == 0) {
      c.momentum[name.substr(kMomentumPrefix.size())] = t;
    } else {
      c.params[name] = t;
    }
  }
  if (!r.done()) r.fail("trailing bytes");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  write_file_atomic(path, serialize_checkpoint(c));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path), path.string());
}

std::string log_header() { return "stage,step,L_spn,L_caption,L_total\n"; }

std::string to_csv(const LogRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g\n", r.stage.c_str(), r.step, r.spn,
                r.caption, r.total);
  return buf;
}

}  // namespace densecap::train
