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

#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "densecap/tensor/tensor.hpp"

namespace densecap {

struct EncoderConfig {
  // Output channels of the conv stages; the last entry is C_feat.
  std::vector<std::size_t> channels{16, 32, 32, 32};
  // Max-pool kernel (= stride) after each stage. Products must be 8 in time
  // and 16 in height and width.
  std::vector<ad::Triple> pools{{1, 2, 2}, {2, 2, 2}, {2, 2, 2}, {2, 2, 2}};
};

struct SpnConfig {
  std::vector<double> anchor_scales{1, 2, 3, 4, 6, 8, 12, 16};
};

struct SoiConfig {
  std::size_t bins = 4;
  std::size_t fc_dim = 128;
};

struct CaptionerConfig {
  std::size_t embed_dim = 32;
  std::size_t ctrl_dim = 8;
  std::size_t hidden_dim = 64;
  // Maximum caption length K including the end token.
  std::size_t max_len = 12;
  bool use_controller = true;
};

struct ModelConfig {
  EncoderConfig encoder;
  SpnConfig spn;
  SoiConfig soi;
  CaptionerConfig captioner;
};

// Anchor scales, captioner sizes and fc width used for the full-size
// ActivityNet setting (36 scales, controller 20, captioner 512, fc6 4096).
ModelConfig full_scale_preset();

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace densecap
