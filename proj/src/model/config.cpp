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

#include "densecap/model/config.hpp"

namespace densecap {

ModelConfig full_scale_preset() {
  ModelConfig c;
  c.encoder.channels = {64, 128, 256, 512};
  c.spn.anchor_scales = {1,  2,  3,  4,  5,  6,  7,  8,  10, 12, 14, 16, 20, 24, 28, 32, 40, 48,
                         56, 64, 66, 68, 70, 72, 74, 76, 78, 80, 82, 84, 86, 88, 90, 92, 94, 96};
  c.soi.fc_dim = 4096;
  c.captioner.ctrl_dim = 20;
  c.captioner.hidden_dim = 512;
  c.captioner.embed_dim = 512;
  c.captioner.max_len = 30;
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  nlohmann::json pools = nlohmann::json::array();
  for (const auto& p : c.encoder.pools) pools.push_back({p.t, p.h, p.w});
  j = {
      {"encoder", {{"channels", c.encoder.channels}, {"pools", pools}}},
      {"spn", {{"anchor_scales", c.spn.anchor_scales}}},
      {"soi", {{"bins", c.soi.bins}, {"fc_dim", c.soi.fc_dim}}},
      {"captioner",
       {{"embed_dim", c.captioner.embed_dim},
        {"ctrl_dim", c.captioner.ctrl_dim},
        {"hidden_dim", c.captioner.hidden_dim},
        {"max_len", c.captioner.max_len},
        {"use_controller", c.captioner.use_controller}}},
  };
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  if (j.contains("encoder")) {
    const auto& e = j.at("encoder");
    c.encoder.channels = e.value("channels", d.encoder.channels);
    if (e.contains("pools")) {
      c.encoder.pools.clear();
      for (const auto& p : e.at("pools")) {
        c.encoder.pools.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>(),
                                   p.at(2).get<std::size_t>()});
      }
    }
  }
  if (j.contains("spn")) c.spn.anchor_scales = j.at("spn").value("anchor_scales", d.spn.anchor_scales);
  if (j.contains("soi")) {
    c.soi.bins = j.at("soi").value("bins", d.soi.bins);
    c.soi.fc_dim = j.at("soi").value("fc_dim", d.soi.fc_dim);
  }
  if (j.contains("captioner")) {
    const auto& k = j.at("captioner");
    c.captioner.embed_dim = k.value("embed_dim", d.captioner.embed_dim);
    c.captioner.ctrl_dim = k.value("ctrl_dim", d.captioner.ctrl_dim);
    c.captioner.hidden_dim = k.value("hidden_dim", d.captioner.hidden_dim);
    c.captioner.max_len = k.value("max_len", d.captioner.max_len);
    c.captioner.use_controller = k.value("use_controller", d.captioner.use_controller);
  }
}

}  // namespace densecap
