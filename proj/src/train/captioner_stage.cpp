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

#include <algorithm>

#include "internal.hpp"

namespace densecap::train {

namespace {

// Record indices per video, ordered by end-time rank.
std::map<std::string, std::vector<std::size_t>> by_video(const FeatureDump& dump) {
  std::map<std::string, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < dump.records.size(); ++i) out[dump.records[i].video_id].push_back(i);
  for (auto& [id, idx] : out) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return dump.records[a].index < dump.records[b].index; });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (dump.records[idx[k]].index != k) {
        throw DataError("feature dump: video " + id + " has a gap in its event indices");
      }
    }
  }
  return out;
}

ad::Tensor row(const std::vector<double>& v) { return ad::Tensor({1, v.size()}, v); }

// Caption loss of a set of records; topics come from teacher histories of
// each touched video.
ad::Tensor batch_loss(ad::Tape& tape, const Model& model, const FeatureDump& dump,
                      const std::map<std::string, std::vector<std::size_t>>& videos,
                      const std::vector<std::size_t>& batch) {
  std::map<std::string, std::vector<ad::Tensor>> topics;
  std::vector<CaptionExample> examples;
  examples.reserve(batch.size());
  for (std::size_t i : batch) {
    const FeatureRecord& rec = dump.records[i];
    auto it = topics.find(rec.video_id);
    if (it == topics.end()) {
      std::vector<Caption> ordered;
      for (std::size_t k : videos.at(rec.video_id)) ordered.push_back(dump.records[k].caption);
      const ContextVector ctx{row(dump.contexts.at(rec.video_id))};
      it = topics.emplace(rec.video_id, model.captioner().teacher_topics(tape, ctx, ordered)).first;
    }
    examples.push_back({row(rec.feature), it->second[rec.index], &rec.caption});
  }
  return model.captioner().caption_loss(tape, examples);
}

void check_vocab(const FeatureDump& dump, const Model& model) {
  if (dump.vocab_words != model.vocab().words()) {
    throw DataError("feature dump vocabulary differs from the model vocabulary");
  }
  if (dump.dim != model.head().dim()) {
    throw DataError("feature dump width " + std::to_string(dump.dim) + " differs from fc width " +
                    std::to_string(model.head().dim()));
  }
  if (dump.max_len != model.config().captioner.max_len) {
    throw DataError("feature dump caption length differs from the model's");
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> caption_batches(const FeatureDump& dump,
                                                      const TrainConfig& config, std::size_t epoch) {
  auto rng = detail::rng_for(config.seed, Stage::captioner, epoch, detail::kShuffle);
  std::vector<std::vector<std::size_t>> batches;
  if (config.shuffle_captions) {
    const auto perm = detail::permutation(dump.records.size(), rng);
    for (std::size_t i = 0; i < perm.size(); i += config.caption_batch) {
      batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(i),
                           perm.begin() + static_cast<std::ptrdiff_t>(std::min(perm.size(), i + config.caption_batch)));
    }
  } else {
    const auto groups = by_video(dump);
    std::vector<const std::vector<std::size_t>*> list;
    for (const auto& [id, idx] : groups) list.push_back(&idx);
    for (std::size_t i : detail::permutation(list.size(), rng)) batches.push_back(*list[i]);
  }
  return batches;
}

StageResult pretrain_captioner(const FeatureDump& dump, const Checkpoint& start,
                               const TrainConfig& config, const RunControl& control) {
  config.validate();
  if (dump.records.empty()) throw ContractError("pretrain_captioner: feature dump is empty");
  const bool resume = start.stage == Stage::captioner && !start.complete;
  if (!(start.stage == Stage::spn && start.complete) && !resume) {
    throw ContractError("pretrain_captioner: start from a finished spn checkpoint or an unfinished "
                        "captioner run, got " + to_string(start.stage));
  }
  Model model = model_from(start);
  check_vocab(dump, model);
  for (const auto& r : dump.records) r.caption.validate(model.vocab().size());
  const auto videos = by_video(dump);

  StageResult res{start, {}};
  Checkpoint& ck = res.checkpoint;
  ck.stage = Stage::captioner;
  ck.train = config;
  if (!resume) {
    ck.step = 0;
    ck.momentum.clear();
  }
  for (auto& [n, t] : ck.momentum) t = t.clone();
  const auto names = model.group({"cap."});

  const std::size_t per_epoch = caption_batches(dump, config, 0).size();
  const std::size_t total = config.captioner_epochs * per_epoch;
  std::size_t epoch_cached = SIZE_MAX;
  std::vector<std::vector<std::size_t>> batches;
  std::size_t done = 0;
  while (ck.step < total && done < control.max_steps) {
    const std::size_t epoch = ck.step / per_epoch;
    if (epoch != epoch_cached) {
      batches = caption_batches(dump, config, epoch);
      epoch_cached = epoch;
    }
    model.params().zero_grad();
    ad::Tape tape;
    const ad::Tensor loss = batch_loss(tape, model, dump, videos, batches[ck.step % per_epoch]);
    const double l = loss.item();
    detail::check_finite(l, Stage::captioner, ck.step);
    tape.backward(loss);
    detail::update(model.params(), ck.momentum, names, config,
                   [&](const std::string&) { return config.captioner_lr; });
    LogRow row{"captioner", ck.step, 0.0, l, l};
    res.log.push_back(row);
    if (control.on_step) control.on_step(row);
    ++ck.step;
    ++done;
  }
  ck.complete = ck.step >= total;
  store_params(model, ck);
  return res;
}

double caption_eval_loss(const Model& model, const FeatureDump& dump) {
  check_vocab(dump, model);
  const auto videos = by_video(dump);
  double sum = 0.0;
  for (const auto& [id, idx] : videos) {
    ad::Tape tape(ad::Tape::Mode::inference);
    sum += batch_loss(tape, model, dump, videos, idx).item() * static_cast<double>(idx.size());
  }
  return sum / static_cast<double>(dump.records.size());
}

}  // namespace densecap::train
