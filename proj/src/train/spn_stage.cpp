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

namespace {

std::vector<std::size_t> non_ignored(const std::vector<AnchorLabel>& labels) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].kind != AnchorLabelKind::ignore) idx.push_back(i);
  }
  return idx;
}

}  // namespace

StageResult pretrain_spn(const std::vector<PreparedVideo>& videos, const Checkpoint& start,
                         const TrainConfig& config, const RunControl& control) {
  config.validate();
  if (videos.empty()) throw ContractError("pretrain_spn: dataset has no videos");
  for (const auto& v : videos) {
    if (v.segments.empty()) throw ContractError("pretrain_spn: video " + v.id + " has no segments");
  }
  const bool resume = start.stage == Stage::spn && !start.complete;
  if (start.stage != Stage::init && !resume) {
    throw ContractError("pretrain_spn: start from an init checkpoint or an unfinished spn run, got " +
                        to_string(start.stage));
  }
  Model model = model_from(start);
  StageResult res{start, {}};
  Checkpoint& ck = res.checkpoint;
  ck.stage = Stage::spn;
  ck.train = config;
  if (!resume) {
    ck.step = 0;
    ck.momentum.clear();
  }
  // Copies share storage; the caller's checkpoint must stay untouched.
  for (auto& [n, t] : ck.momentum) t = t.clone();
  std::vector<std::string> names = model.group({"spn."});
  if (!config.freeze_encoder) {
    const auto enc = model.group({"encoder."});
    names.insert(names.begin(), enc.begin(), enc.end());
  } else {
    for (const auto& n : model.group({"encoder."})) model.params().get(n).set_requires_grad(false);
  }

  const std::size_t total = config.spn_epochs * videos.size();
  std::size_t epoch_cached = SIZE_MAX;
  std::vector<std::size_t> order;
  std::size_t done = 0;
  while (ck.step < total && done < control.max_steps) {
    const std::size_t epoch = ck.step / videos.size();
    if (epoch != epoch_cached) {
      auto shuffle_rng = detail::rng_for(config.seed, Stage::spn, epoch, detail::kShuffle);
      order = detail::permutation(videos.size(), shuffle_rng);
      epoch_cached = epoch;
    }
    const PreparedVideo& v = videos[order[ck.step % videos.size()]];
    auto rng = detail::rng_for(config.seed, Stage::spn, ck.step, detail::kSample);

    model.params().zero_grad();
    ad::Tape tape;
    const FeatureMap features = model.encoder().encode(tape, v.video);
    const SpnOutput out = model.spn().forward(tape, features);
    const auto labels = assign_labels(model.spn().grid(features.timesteps()), v.segments);
    const auto batch = sample_minibatch(labels, config.spn_batch, rng);
    const ad::Tensor loss = spn_loss(tape, out, labels, batch);
    const double l = loss.item();
    detail::check_finite(l, Stage::spn, ck.step);
    tape.backward(loss);
    detail::update(model.params(), ck.momentum, names, config,
                   [&](const std::string&) { return config.spn_lr; });

    LogRow row{"spn", ck.step, l, 0.0, l};
    res.log.push_back(row);
    if (control.on_step) control.on_step(row);
    ++ck.step;
    ++done;
  }
  ck.complete = ck.step >= total;
  store_params(model, ck);
  return res;
}

double spn_eval_loss(const Model& model, const std::vector<PreparedVideo>& videos) {
  double sum = 0.0;
  for (const auto& v : videos) {
    ad::Tape tape(ad::Tape::Mode::inference);
    const FeatureMap features = model.encoder().encode(tape, v.video);
    const SpnOutput out = model.spn().forward(tape, features);
    const auto labels = assign_labels(model.spn().grid(features.timesteps()), v.segments);
    const auto idx = non_ignored(labels);
    sum += spn_loss(tape, out, labels, idx).item();
  }
  return sum / static_cast<double>(videos.size());
}

}  // namespace densecap::train
