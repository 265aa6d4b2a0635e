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

#include "densecap/model/encoder.hpp"

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap {

namespace {
std::size_t round_up(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }
}  // namespace

VideoTensor video_from_u8(std::span<const std::uint8_t> raw, std::size_t frames,
                          std::size_t height, std::size_t width, double frame_rate,
                          std::string video_id, std::size_t time_multiple,
                          std::size_t space_multiple) {
  if (raw.size() != 3 * frames * height * width) {
    throw DataError("video '" + video_id + "': expected " +
                    std::to_string(3 * frames * height * width) + " samples, got " +
                    std::to_string(raw.size()));
  }
  const std::size_t L = round_up(frames, time_multiple);
  const std::size_t H = round_up(height, space_multiple);
  const std::size_t W = round_up(width, space_multiple);
  ad::Tensor data({3, L, H, W});
  auto out = data.values_mut();
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t t = 0; t < frames; ++t)
      for (std::size_t h = 0; h < height; ++h)
        for (std::size_t w = 0; w < width; ++w) {
          const std::uint8_t v = raw[((c * frames + t) * height + h) * width + w];
          out[((c * L + t) * H + h) * W + w] = static_cast<double>(v) / 127.5 - 1.0;
        }
  return {data, frame_rate, std::move(video_id)};
}

VideoEncoder::VideoEncoder(ad::ParamStore& params, const EncoderConfig& config,
                           const std::string& prefix)
    : config_(config) {
  if (config.channels.empty() || config.channels.size() != config.pools.size()) {
    throw ContractError("encoder: need one pooling triple per conv stage");
  }
  std::size_t in = 3;
  std::size_t ph = 1, pw = 1;
  for (std::size_t i = 0; i < config.channels.size(); ++i) {
    const std::string base = prefix + ".conv" + std::to_string(i + 1);
    const std::size_t out = config.channels[i];
    weights_.push_back(params.add(base + ".w", {out, in, 3, 3, 3}, ad::Init::he_uniform, true));
    biases_.push_back(params.add(base + ".b", {out}, ad::Init::zeros));
    names_.push_back(base + ".w");
    names_.push_back(base + ".b");
    time_stride_ *= config.pools[i].t;
    ph *= config.pools[i].h;
    pw *= config.pools[i].w;
    in = out;
  }
  if (ph != pw) throw ContractError("encoder: height and width downsampling must agree");
  space_stride_ = ph;
}

FeatureMap VideoEncoder::encode(ad::Tape& tape, const VideoTensor& video) const {
  const auto& x = video.data;
  if (x.rank() != 4 || x.dim(0) != 3) {
    throw ShapeError("encoder: video must be 3 x L x H x W, got " + ad::to_string(x.shape()));
  }
  if (x.dim(1) % time_stride_ || x.dim(2) % space_stride_ || x.dim(3) % space_stride_) {
    throw ContractError("encoder: video '" + video.video_id + "' of shape " +
                        ad::to_string(x.shape()) + " is not divisible by " +
                        std::to_string(time_stride_) + " x " + std::to_string(space_stride_) +
                        " x " + std::to_string(space_stride_));
  }
  ad::Tensor h = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    h = ad::conv3d(tape, h, weights_[i], biases_[i], {1, 1, 1}, {1, 1, 1});
    h = ad::relu(tape, h);
    h = ad::maxpool3d(tape, h, config_.pools[i], config_.pools[i]);
  }
  return {h, video.video_id};
}

}  // namespace densecap
