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

#include "densecap/model/captioner.hpp"

#include <algorithm>
#include <numeric>

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap {

namespace {

// Standard LSTM cell over a pre-concatenated input. Returns (h, c).
std::pair<ad::Tensor, ad::Tensor> lstm_cell(ad::Tape& tape, const ad::Tensor& input,
                                            const ad::Tensor& c_prev, const ad::Tensor& w,
                                            const ad::Tensor& b, std::size_t hidden) {
  ad::Tensor gates = ad::linear(tape, input, w, b);
  ad::Tensor f = ad::sigmoid(tape, ad::slice(tape, gates, 1, 0, hidden));
  ad::Tensor i = ad::sigmoid(tape, ad::slice(tape, gates, 1, hidden, 2 * hidden));
  ad::Tensor o = ad::sigmoid(tape, ad::slice(tape, gates, 1, 2 * hidden, 3 * hidden));
  ad::Tensor g = ad::tanh(tape, ad::slice(tape, gates, 1, 3 * hidden, 4 * hidden));
  ad::Tensor c = ad::add(tape, ad::mul(tape, i, g), ad::mul(tape, f, c_prev));
  ad::Tensor h = ad::mul(tape, o, ad::tanh(tape, c));
  return {h, c};
}

void set_forget_bias(ad::Tensor& b, std::size_t hidden) {
  auto v = b.values_mut();
  for (std::size_t j = 0; j < hidden; ++j) v[j] = 1.0;
}

}  // namespace

std::vector<std::size_t> end_time_order(std::span<const Segment> segments) {
  std::vector<std::size_t> order(segments.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = segments[a];
    const auto& y = segments[b];
    if (x.end() != y.end()) return x.end() < y.end();
    if (x.start() != y.start()) return x.start() < y.start();
    return a < b;
  });
  return order;
}

HierarchicalCaptioner::HierarchicalCaptioner(ad::ParamStore& params, std::size_t vocab_size,
                                             std::size_t visual_dim,
                                             const CaptionerConfig& config,
                                             const std::string& prefix)
    : config_(config), vocab_size_(vocab_size), visual_dim_(visual_dim) {
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kReserved)) {
    throw ContractError("captioner: vocabulary has no words");
  }
  if (config.max_len < 2) throw ContractError("captioner: max_len must be at least 2");
  const std::size_t e = config.embed_dim, c = config.ctrl_dim, h = config.hidden_dim;
  auto add = [&](const std::string& name, ad::Shape shape, ad::Init init) {
    names_.push_back(prefix + "." + name);
    return params.add(prefix + "." + name, std::move(shape), init);
  };
  embed_ = add("embed", {vocab_size, e}, ad::Init::small_uniform);
  if (config.use_controller) {
    ctrl_w_ = add("ctrl.w", {e + visual_dim + c, 4 * c}, ad::Init::fan_in_uniform);
    ctrl_b_ = add("ctrl.b", {4 * c}, ad::Init::zeros);
    set_forget_bias(ctrl_b_, c);
  }
  dec1_w_ = add("dec1.w", {e + h, 4 * h}, ad::Init::fan_in_uniform);
  dec1_b_ = add("dec1.b", {4 * h}, ad::Init::zeros);
  set_forget_bias(dec1_b_, h);
  dec2_w_ = add("dec2.w", {h + visual_dim + c + h, 4 * h}, ad::Init::fan_in_uniform);
  dec2_b_ = add("dec2.b", {4 * h}, ad::Init::zeros);
  set_forget_bias(dec2_b_, h);
  out_w_ = add("out.w", {h, vocab_size}, ad::Init::fan_in_uniform);
  out_b_ = add("out.b", {vocab_size}, ad::Init::zeros);
}

ControllerState HierarchicalCaptioner::initial_controller() const {
  return {ad::Tensor({1, config_.ctrl_dim}), ad::Tensor({1, config_.ctrl_dim})};
}

ControllerState HierarchicalCaptioner::controller_step(ad::Tape& tape, const ad::Tensor& sentence,
                                                       const ContextVector& context,
                                                       const ControllerState& state) const {
  if (!config_.use_controller) throw ContractError("controller is disabled in this model");
  if (sentence.numel() != config_.embed_dim || context.vector.numel() != visual_dim_ ||
      state.h.numel() != config_.ctrl_dim) {
    throw ShapeError("controller_step: expected sentence " + std::to_string(config_.embed_dim) +
                     ", context " + std::to_string(visual_dim_) + ", state " +
                     std::to_string(config_.ctrl_dim));
  }
  ad::Tensor s = ad::reshape(tape, sentence, {1, config_.embed_dim});
  ad::Tensor v = ad::reshape(tape, context.vector, {1, visual_dim_});
  ad::Tensor input = ad::concat(tape, {s, v, state.h}, 1);
  auto [h, c] = lstm_cell(tape, input, state.c, ctrl_w_, ctrl_b_, config_.ctrl_dim);
  return {h, c};
}

ad::Tensor HierarchicalCaptioner::encode_sentence(ad::Tape& tape, const Caption& caption) const {
  std::vector<int> words;
  for (int id : caption.ids) {
    if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) continue;
    words.push_back(id);
  }
  if (words.empty()) throw ContractError("encode_sentence: caption has no words");
  ad::Tensor rows = ad::embedding_lookup(tape, embed_, words);
  return ad::reshape(tape, ad::mean(tape, rows, 0), {1, config_.embed_dim});
}

ad::Tensor HierarchicalCaptioner::zero_sentence() const {
  return ad::Tensor({1, config_.embed_dim});
}

DecoderState HierarchicalCaptioner::initial_decoder(std::size_t batch) const {
  const ad::Shape s{batch, config_.hidden_dim};
  return {ad::Tensor(s), ad::Tensor(s), ad::Tensor(s), ad::Tensor(s)};
}

std::pair<ad::Tensor, DecoderState> HierarchicalCaptioner::decode_step(
    ad::Tape& tape, std::span<const int> tokens, const ad::Tensor& visual,
    const ad::Tensor& topic, const DecoderState& state) const {
  const std::size_t b = tokens.size();
  if (visual.numel() != b * visual_dim_ || topic.numel() != b * config_.ctrl_dim) {
    throw ShapeError("decode_step: visual/topic rows do not match the token batch");
  }
  const std::size_t h = config_.hidden_dim;
  ad::Tensor emb = ad::embedding_lookup(tape, embed_, tokens);
  auto [h1, c1] = lstm_cell(tape, ad::concat(tape, {emb, state.h1}, 1), state.c1, dec1_w_, dec1_b_, h);
  ad::Tensor in2 = ad::concat(
      tape,
      {h1, ad::reshape(tape, visual, {b, visual_dim_}), ad::reshape(tape, topic, {b, config_.ctrl_dim}),
       state.h2},
      1);
  auto [h2, c2] = lstm_cell(tape, in2, state.c2, dec2_w_, dec2_b_, h);
  ad::Tensor logits = ad::linear(tape, h2, out_w_, out_b_);
  return {logits, {h1, c1, h2, c2}};
}

ad::Tensor HierarchicalCaptioner::topic_or_zero(const ControllerState& s) const {
  if (config_.use_controller) return s.h;
  return ad::Tensor({1, config_.ctrl_dim});
}

std::vector<ad::Tensor> HierarchicalCaptioner::teacher_topics(
    ad::Tape& tape, const ContextVector& context, std::span<const Caption> ordered,
    const ControllerObserver* observer) const {
  std::vector<ad::Tensor> topics;
  topics.reserve(ordered.size());
  ControllerState state = initial_controller();
  for (std::size_t t = 0; t < ordered.size(); ++t) {
    if (observer) (*observer)(t, t == 0 ? nullptr : &ordered[t - 1]);
    if (!config_.use_controller) {
      topics.push_back(topic_or_zero(state));
      continue;
    }
    ad::Tensor sentence = t == 0 ? zero_sentence() : encode_sentence(tape, ordered[t - 1]);
    state = controller_step(tape, sentence, context, state);
    topics.push_back(state.h);
  }
  return topics;
}

ad::Tensor HierarchicalCaptioner::caption_loss(ad::Tape& tape,
                                               std::span<const CaptionExample> batch) const {
  if (batch.empty()) throw ContractError("caption_loss: empty batch");
  const std::size_t b = batch.size();
  const std::size_t k_max = config_.max_len;
  std::vector<ad::Tensor> visuals, topics;
  std::size_t steps = 0;
  for (const auto& ex : batch) {
    if (!ex.caption) throw ContractError("caption_loss: example without a caption");
    if (ex.caption->ids.size() != k_max) {
      throw ContractError("caption_loss: caption not padded to max_len " + std::to_string(k_max));
    }
    ex.caption->validate(vocab_size_);
    visuals.push_back(ad::reshape(tape, ex.visual, {1, visual_dim_}));
    topics.push_back(ad::reshape(tape, ex.topic, {1, config_.ctrl_dim}));
    steps = std::max(steps, ex.caption->length());
  }
  ad::Tensor visual = b == 1 ? visuals[0] : ad::concat(tape, visuals, 0);
  ad::Tensor topic = b == 1 ? topics[0] : ad::concat(tape, topics, 0);
  const double norm = -1.0 / (static_cast<double>(k_max) * static_cast<double>(b));

  DecoderState state = initial_decoder(b);
  std::vector<int> tokens(b, Vocabulary::kBos);
  ad::Tensor total;
  for (std::size_t k = 0; k < steps; ++k) {
    auto [logits, next] = decode_step(tape, tokens, visual, topic, state);
    state = next;
    ad::Tensor logp = ad::log_softmax(tape, logits);
    std::vector<double> weights(b * vocab_size_, 0.0);
    for (std::size_t r = 0; r < b; ++r) {
      const int target = batch[r].caption->ids[k];
      if (target != Vocabulary::kPad) {
        weights[r * vocab_size_ + static_cast<std::size_t>(target)] = norm;
      }
      tokens[r] = target;
    }
    ad::Tensor term = ad::weighted_sum(tape, logp, weights);
    total = total.defined() ? ad::add(tape, total, term) : term;
  }
  return total;
}

std::vector<Caption> HierarchicalCaptioner::decode_greedy(
    ad::Tape& tape, std::span<const ProposalFeature> proposals, const ContextVector& context,
    const ControllerObserver* observer) const {
  std::vector<Segment> segments;
  for (const auto& p : proposals) segments.push_back(p.proposal);
  const auto order = end_time_order(segments);
  std::vector<Caption> result(proposals.size());
  ControllerState ctrl = initial_controller();
  const Caption* previous = nullptr;
  for (std::size_t step = 0; step < order.size(); ++step) {
    const std::size_t idx = order[step];
    if (observer) (*observer)(step, previous);
    if (config_.use_controller) {
      ad::Tensor sentence = previous && !previous->word_ids().empty()
                                ? encode_sentence(tape, *previous)
                                : zero_sentence();
      ctrl = controller_step(tape, sentence, context, ctrl);
    }
    ad::Tensor topic = topic_or_zero(ctrl);
    DecoderState state = initial_decoder(1);
    std::vector<int> words;
    int token = Vocabulary::kBos;
    for (std::size_t k = 0; k + 1 < config_.max_len; ++k) {
      const int in[] = {token};
      auto [logits, next] = decode_step(tape, in, proposals[idx].vector, topic, state);
      state = next;
      auto lv = logits.values();
      // PAD and BOS are never emitted.
      int best = Vocabulary::kEos;
      for (std::size_t j = Vocabulary::kEos; j < lv.size(); ++j) {
        if (lv[j] > lv[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
      }
      if (best == Vocabulary::kEos) break;
      words.push_back(best);
      token = best;
    }
    result[idx] = Caption::from_word_ids(words, config_.max_len);
    previous = &result[idx];
  }
  return result;
}

}  // namespace densecap
