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

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "densecap/model/config.hpp"
#include "densecap/model/soi_pool.hpp"
#include "densecap/model/vocabulary.hpp"
#include "densecap/tensor/params.hpp"

namespace densecap {

// Controller LSTM state (1 x D_ctrl each).
struct ControllerState {
  ad::Tensor h;
  ad::Tensor c;
};

// Two-layer sentence decoder state (B x hidden each).
struct DecoderState {
  ad::Tensor h1, c1, h2, c2;
};

// One teacher-forced caption: visual feature I_p (1 x D_fc), controller topic
// h^c (1 x D_ctrl) and the target caption.
struct CaptionExample {
  ad::Tensor visual;
  ad::Tensor topic;
  const Caption* caption = nullptr;
};

// Called with (t, previous caption or nullptr for t = 0) every time the
// controller consumes a sentence encoding.
using ControllerObserver = std::function<void(std::size_t, const Caption*)>;

/// Hierarchical caption generator.
///
/// The controller fuses the previous sentence encoding S_{t-1} and the video
/// context I_c into a topic vector h^c_t. The decoder's first LSTM layer reads
/// word embeddings; the second reads [h1_k; I_p; h^c_t; h2_{k-1}] and its
/// hidden state is projected to vocabulary logits. Gate blocks are ordered
/// forget, input, output, candidate.
class HierarchicalCaptioner {
 public:
  HierarchicalCaptioner(ad::ParamStore& params, std::size_t vocab_size, std::size_t visual_dim,
                        const CaptionerConfig& config, const std::string& prefix = "cap");

  ControllerState initial_controller() const;
  ControllerState controller_step(ad::Tape& tape, const ad::Tensor& sentence,
                                  const ContextVector& context,
                                  const ControllerState& state) const;

  // Mean word embedding (1 x D_embed) of the caption's words.
  ad::Tensor encode_sentence(ad::Tape& tape, const Caption& caption) const;
  ad::Tensor zero_sentence() const;

  DecoderState initial_decoder(std::size_t batch) const;
  // Logits (B x |V|) for the next token given the current tokens.
  std::pair<ad::Tensor, DecoderState> decode_step(ad::Tape& tape, std::span<const int> tokens,
                                                  const ad::Tensor& visual,
                                                  const ad::Tensor& topic,
                                                  const DecoderState& state) const;

  // Topic vectors h^c_1..h^c_T with the ground-truth captions as history.
  // Captions must already be in ascending end-time order. With the controller
  // disabled every topic is zero.
  std::vector<ad::Tensor> teacher_topics(ad::Tape& tape, const ContextVector& context,
                                         std::span<const Caption> ordered,
                                         const ControllerObserver* observer = nullptr) const;

  // -(1 / (K * T)) * sum over non-PAD targets of log P(w_k | w_<k, I_p, h^c).
  ad::Tensor caption_loss(ad::Tape& tape, std::span<const CaptionExample> batch) const;

  // Greedy decoding of every proposal in ascending end-time order (ties by
  // start, then input index), feeding each decoded sentence back as history.
  // Captions are returned aligned with the input order.
  std::vector<Caption> decode_greedy(ad::Tape& tape, std::span<const ProposalFeature> proposals,
                                     const ContextVector& context,
                                     const ControllerObserver* observer = nullptr) const;

  const CaptionerConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  bool uses_controller() const { return config_.use_controller; }
  const std::vector<std::string>& param_names() const { return names_; }

 private:
  ad::Tensor topic_or_zero(const ControllerState& s) const;

  CaptionerConfig config_;
  std::size_t vocab_size_;
  std::size_t visual_dim_;
  ad::Tensor embed_;
  ad::Tensor ctrl_w_, ctrl_b_;
  ad::Tensor dec1_w_, dec1_b_, dec2_w_, dec2_b_;
  ad::Tensor out_w_, out_b_;
  std::vector<std::string> names_;
};

// Proposal order used for decoding: ascending end, then start, then index.
std::vector<std::size_t> end_time_order(std::span<const Segment> segments);

}  // namespace densecap
