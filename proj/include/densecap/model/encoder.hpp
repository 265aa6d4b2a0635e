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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "densecap/model/config.hpp"
#include "densecap/tensor/params.hpp"
#include "densecap/tensor/tape.hpp"

namespace densecap {

// 3 x L x H x W frames normalized to [-1, 1].
struct VideoTensor {
  ad::Tensor data;
  double frame_rate = 8.0;
  std::string video_id;

  std::size_t frames() const { return data.dim(1); }
};

// C_feat x L/8 x H/16 x W/16 shared feature map.
struct FeatureMap {
  ad::Tensor data;
  std::string source_video;

  std::size_t channels() const { return data.dim(0); }
  std::size_t timesteps() const { return data.dim(1); }
};

// Builds a VideoTensor from raw 8-bit samples laid out 3 x L x H x W, scaling
// to [-1, 1] and zero-padding every axis up to the next multiple of
// (time_multiple, space_multiple, space_multiple).
VideoTensor video_from_u8(std::span<const std::uint8_t> raw, std::size_t frames,
                          std::size_t height, std::size_t width, double frame_rate,
                          std::string video_id, std::size_t time_multiple = 8,
                          std::size_t space_multiple = 16);

/// Fully convolutional spatiotemporal trunk: per stage a 3x3x3 convolution
/// (padding 1), ReLU, then max pooling.
class VideoEncoder {
 public:
  VideoEncoder(ad::ParamStore& params, const EncoderConfig& config,
               const std::string& prefix = "encoder");

  FeatureMap encode(ad::Tape& tape, const VideoTensor& video) const;

  std::size_t feature_channels() const { return config_.channels.back(); }
  std::size_t time_stride() const { return time_stride_; }
  std::size_t space_stride() const { return space_stride_; }
  const std::vector<std::string>& param_names() const { return names_; }

 private:
  EncoderConfig config_;
  std::vector<ad::Tensor> weights_;
  std::vector<ad::Tensor> biases_;
  std::vector<std::string> names_;
  std::size_t time_stride_ = 1;
  std::size_t space_stride_ = 1;
};

}  // namespace densecap
