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

#include <random>

#include <gtest/gtest.h>

#include "densecap/errors.hpp"
#include "densecap/model/encoder.hpp"
#include "densecap/tensor/ops.hpp"

using namespace densecap;

namespace {

VideoTensor random_video(std::size_t l, std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dist(0, 255);
  std::vector<std::uint8_t> raw(3 * l * h * w);
  for (auto& v : raw) v = static_cast<std::uint8_t>(dist(rng));
  return video_from_u8(raw, l, h, w, 8.0, "v");
}

}  // namespace

TEST(Encoder, DeskShape) {
  ad::ParamStore params(1);
  VideoEncoder enc(params, EncoderConfig{});
  ad::Tape tape(ad::Tape::Mode::inference);
  FeatureMap f = enc.encode(tape, random_video(96, 16, 16, 3));
  EXPECT_EQ(f.data.shape(), (ad::Shape{32, 12, 1, 1}));
  EXPECT_EQ(enc.time_stride(), 8u);
  EXPECT_EQ(enc.space_stride(), 16u);
}

TEST(Encoder, FullResolutionShape) {
  // 512 output channels at 768 x 112 x 112; narrow early stages with zero
  // weights keep this cheap.
  EncoderConfig cfg;
  cfg.channels = {1, 1, 1, 512};
  ad::ParamStore params(1);
  VideoEncoder enc(params, cfg);
  params.fill_zero();
  VideoTensor video{ad::Tensor({3, 768, 112, 112}), 8.0, "big"};
  ad::Tape tape(ad::Tape::Mode::inference);
  FeatureMap f = enc.encode(tape, video);
  EXPECT_EQ(f.data.shape(), (ad::Shape{512, 96, 7, 7}));
}

TEST(Encoder, ZeroVideoZeroWeights) {
  ad::ParamStore params(1);
  VideoEncoder enc(params, EncoderConfig{});
  params.fill_zero();
  VideoTensor video{ad::Tensor({3, 16, 32, 32}), 8.0, "z"};
  ad::Tape tape(ad::Tape::Mode::inference);
  FeatureMap f = enc.encode(tape, video);
  EXPECT_EQ(f.data.shape(), (ad::Shape{32, 2, 2, 2}));
  for (double v : f.data.values()) EXPECT_EQ(v, 0.0);
}

TEST(Encoder, RejectsNonDivisible) {
  ad::ParamStore params(1);
  VideoEncoder enc(params, EncoderConfig{});
  VideoTensor video{ad::Tensor({3, 12, 16, 16}), 8.0, "odd"};
  ad::Tape tape;
  EXPECT_THROW(enc.encode(tape, video), ContractError);
}

TEST(Encoder, PadsAndNormalizes) {
  std::vector<std::uint8_t> raw(3 * 5 * 10 * 10, 255);
  raw[0] = 0;
  VideoTensor v = video_from_u8(raw, 5, 10, 10, 8.0, "p");
  EXPECT_EQ(v.data.shape(), (ad::Shape{3, 8, 16, 16}));
  EXPECT_DOUBLE_EQ(v.data.at(0), -1.0);
  EXPECT_DOUBLE_EQ(v.data.at(1), 1.0);
  EXPECT_DOUBLE_EQ(v.data.at(10), 0.0);  // padded column
  EXPECT_THROW(video_from_u8(raw, 6, 10, 10, 8.0, "bad"), DataError);
}

TEST(Encoder, GradientReachesFirstConv) {
  ad::ParamStore params(5);
  VideoEncoder enc(params, EncoderConfig{});
  ad::Tape tape;
  FeatureMap f = enc.encode(tape, random_video(16, 16, 16, 9));
  ad::Tensor loss = ad::sum(tape, f.data);
  tape.backward(loss);
  double norm = 0.0;
  for (double g : params.get("encoder.conv1.w").grad()) norm += g * g;
  EXPECT_GT(norm, 0.0);
}
