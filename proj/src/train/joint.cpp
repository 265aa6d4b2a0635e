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

#include "densecap/tensor/ops.hpp"
#include "internal.hpp"

namespace densecap::train {

JointLosses joint_losses(Model& model, const PreparedVideo& video, double lambda,
                         std::uint64_t sample_seed, std::size_t anchors,
                         const ControllerObserver* observer) {
  model.params().zero_grad();
  ad::Tape tape;
  const FeatureMap features = model.encoder().encode(tape, video.video);
  const SpnOutput out = model.spn().forward(tape, features);
  const auto labels = assign_labels(model.spn().grid(features.timesteps()), video.segments);
  std::mt19937_64 rng(sample_seed);
  const auto batch = sample_minibatch(labels, anchors, rng);
  const ad::Tensor l_spn = spn_loss(tape, out, labels, batch);

  const ContextVector ctx = model.head().context_vector(tape, features);
  const auto topics = model.captioner().teacher_topics(tape, ctx, video.captions, observer);
  std::vector<CaptionExample> examples;
  for (std::size_t t = 0; t < video.segments.size(); ++t) {
    examples.push_back({model.head().proposal_feature(tape, features, video.segments[t]).vector,
                        topics[t], &video.captions[t]});
  }
  const ad::Tensor l_cap = model.captioner().caption_loss(tape, examples);
  const ad::Tensor total = ad::add(tape, l_spn, ad::scale(tape, l_cap, lambda));
  tape.backward(total);
  return {l_spn.item(), l_cap.item(), total.item()};
}

StageResult train_joint(const std::vector<PreparedVideo>& videos, const Checkpoint& spn,
                        const Checkpoint& captioner, const TrainConfig& config,
                        const RunControl& control, const Checkpoint* resume) {
  config.validate();
  if (videos.empty()) throw ContractError("train_joint: dataset has no videos");
  if (spn.stage != Stage::spn || !spn.complete) {
    throw ContractError("train_joint: needs a finished spn checkpoint, got " + to_string(spn.stage));
  }
  if (captioner.stage != Stage::captioner || !captioner.complete) {
    throw ContractError("train_joint: needs a finished captioner checkpoint, got " +
                        to_string(captioner.stage));
  }
  if (nlohmann::json(spn.model) != nlohmann::json(captioner.model)) {
    throw ContractError("train_joint: spn and captioner checkpoints use different model configs");
  }
  if (!(spn.vocab == captioner.vocab)) {
    throw DataError("train_joint: spn and captioner checkpoints use different vocabularies");
  }

  StageResult res{spn, {}};
  Checkpoint& ck = res.checkpoint;
  if (resume) {
    if (resume->stage != Stage::joint || resume->complete) {
      throw ContractError("train_joint: can only resume an unfinished joint run");
    }
    ck = *resume;
  } else {
    // Encoder, SPN and fc6 from the SPN stage, the captioner from its stage.
    for (const auto& [n, t] : captioner.params) {
      if (n.rfind("cap.", 0) == 0) ck.params[n] = t;
    }
    ck.stage = Stage::joint;
    ck.step = 0;
    ck.momentum.clear();
  }
  ck.train = config;
  for (auto& [n, t] : ck.momentum) t = t.clone();
  Model model = model_from(ck);

  std::vector<std::string> names = model.group({"spn.", "fc6.", "cap."});
  if (!config.freeze_encoder) {
    const auto enc = model.group({"encoder."});
    names.insert(names.begin(), enc.begin(), enc.end());
  } else {
    for (const auto& n : model.group({"encoder."})) model.params().get(n).set_requires_grad(false);
  }
  const double lr_vision = config.spn_lr * config.joint_decay;
  const double lr_language = config.captioner_lr * config.joint_decay;
  auto lr = [&](const std::string& n) {
    return n.rfind("fc6.", 0) == 0 || n.rfind("cap.", 0) == 0 ? lr_language : lr_vision;
  };

  const std::size_t total = config.joint_epochs * videos.size();
  std::size_t epoch_cached = SIZE_MAX;
  std::vector<std::size_t> order;
  std::size_t done = 0;
  while (ck.step < total && done < control.max_steps) {
    const std::size_t epoch = ck.step / videos.size();
    if (epoch != epoch_cached) {
      auto shuffle_rng = detail::rng_for(config.seed, Stage::joint, epoch, detail::kShuffle);
      order = detail::permutation(videos.size(), shuffle_rng);
      epoch_cached = epoch;
    }
    const PreparedVideo& v = videos[order[ck.step % videos.size()]];
    const std::uint64_t sample_seed = detail::rng_for(config.seed, Stage::joint, ck.step, detail::kSample)();
    const JointLosses l = joint_losses(model, v, config.lambda, sample_seed, config.spn_batch);
    detail::check_finite(l.total, Stage::joint, ck.step);
    detail::update(model.params(), ck.momentum, names, config, lr);
    LogRow row{"joint", ck.step, l.spn, l.caption, l.total};
    res.log.push_back(row);
    if (control.on_step) control.on_step(row);
    ++ck.step;
    ++done;
  }
  ck.complete = ck.step >= total;
  store_params(model, ck);
  return res;
}

}  // namespace densecap::train
