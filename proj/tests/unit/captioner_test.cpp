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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "densecap/errors.hpp"
#include "densecap/model/captioner.hpp"
#include "densecap/tensor/ops.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace densecap;
using namespace densecap::oracle;

namespace {

CaptionerConfig tiny_config() {
  CaptionerConfig c;
  c.embed_dim = 3;
  c.ctrl_dim = 2;
  c.hidden_dim = 4;
  c.max_len = 5;
  return c;
}

}  // namespace

TEST(Vocabulary, BuildOrderAndFile) {
  std::vector<std::vector<std::string>> s{{"b", "a", "c"}, {"a", "c"}, {"c", "d"}};
  Vocabulary v = Vocabulary::build(s, 1);
  EXPECT_EQ(v.words(), (std::vector<std::string>{"c", "a", "b", "d"}));
  EXPECT_EQ(v.id("c"), 4);
  EXPECT_EQ(v.id("zzz"), Vocabulary::kUnk);
  EXPECT_EQ(Vocabulary::build(s, 2).words(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(v.serialize(), "c\na\nb\nd\n");
  EXPECT_EQ(Vocabulary::from_tokens(v.words()), v);
  EXPECT_THROW(Vocabulary::from_tokens({"x", "x"}), DataError);
  EXPECT_THROW(v.token(99), ContractError);
}

TEST(Caption, Layout) {
  Caption c = Caption::from_word_ids({5, 6}, 5);
  EXPECT_EQ(c.ids, (std::vector<int>{5, 6, 2, 0, 0}));
  EXPECT_EQ(c.length(), 3u);
  EXPECT_EQ(c.word_ids(), (std::vector<int>{5, 6}));
  Caption t = Caption::from_word_ids({5, 6, 7, 8, 9, 10}, 5);
  EXPECT_EQ(t.ids, (std::vector<int>{5, 6, 7, 8, 2}));
  EXPECT_NO_THROW(c.validate(7));
  EXPECT_THROW(c.validate(6), ContractError);
  Caption bad{{5, 0, 2, 0, 0}};
  EXPECT_THROW(bad.validate(7), ContractError);
  Caption no_eos{{5, 5, 5, 5, 5}};
  EXPECT_THROW(no_eos.validate(7), ContractError);
}

TEST(Captioner, ZeroWeightsController) {
  ad::ParamStore params(1);
  HierarchicalCaptioner cap(params, 8, 5, tiny_config());
  params.fill_zero();
  std::mt19937_64 rng(1);
  ContextVector ctx{random_row(5, rng)};
  ad::Tape tape(ad::Tape::Mode::inference);
  auto s = cap.controller_step(tape, random_row(3, rng), ctx, cap.initial_controller());
  for (double v : s.h.values()) EXPECT_EQ(v, 0.0);
  for (double v : s.c.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(cap.controller_step(tape, random_row(4, rng), ctx, cap.initial_controller()),
               ShapeError);
}

TEST(Captioner, ZeroWeightsUniformSoftmax) {
  ad::ParamStore params(1);
  HierarchicalCaptioner cap(params, 9, 5, tiny_config());
  params.fill_zero();
  std::mt19937_64 rng(1);
  ad::Tape tape(ad::Tape::Mode::inference);
  const int tok[] = {6};
  auto [logits, st] = cap.decode_step(tape, tok, random_row(5, rng), random_row(2, rng),
                                      cap.initial_decoder(1));
  auto p = ad::softmax(tape, logits);
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 9, 1e-15);
  const int bad[] = {9};
  EXPECT_THROW(cap.decode_step(tape, bad, random_row(5, rng), random_row(2, rng),
                               cap.initial_decoder(1)),
               ContractError);
}

TEST(Captioner, DecodeStepDeterministic) {
  ad::ParamStore params(2);
  HierarchicalCaptioner cap(params, 9, 5, tiny_config());
  std::mt19937_64 rng(1);
  auto vis = random_row(5, rng), top = random_row(2, rng);
  ad::Tape tape(ad::Tape::Mode::inference);
  const int tok[] = {4};
  auto a = cap.decode_step(tape, tok, vis, top, cap.initial_decoder(1)).first;
  auto b = cap.decode_step(tape, tok, vis, top, cap.initial_decoder(1)).first;
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(a.at(i), b.at(i));
}

TEST(Captioner, EncodeSentence) {
  ad::ParamStore params(3);
  HierarchicalCaptioner cap(params, 10, 5, tiny_config());
  CaptionerReference ref{params, tiny_config(), 10};
  ad::Tape tape(ad::Tape::Mode::inference);
  auto one = cap.encode_sentence(tape, Caption::from_word_ids({7}, 5));
  EXPECT_EQ(to_vec(one), ref.row("cap.embed", 7));
  Caption c = Caption::from_word_ids({4, 9, 4, 6}, 5);
  auto m = cap.encode_sentence(tape, c);
  Vec expect = ref.encode(c);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m.at(j), expect[j], 1e-15);
  EXPECT_THROW(cap.encode_sentence(tape, Caption::from_word_ids({}, 5)), ContractError);

  auto emb = params.get("cap.embed").values_mut();
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t j = 0; j < 3; ++j) emb[r * 3 + j] = 0.1 * double(j + 1);
  auto same = cap.encode_sentence(tape, c);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(same.at(j), 0.1 * double(j + 1), 1e-15);
}

TEST(Captioner, UniformModelLoss) {
  ad::ParamStore params(1);
  const std::size_t v = 11;
  HierarchicalCaptioner cap(params, v, 5, tiny_config());
  params.fill_zero();
  std::mt19937_64 rng(1);
  std::vector<Caption> caps{Caption::from_word_ids({4, 5}, 5), Caption::from_word_ids({6}, 5),
                            Caption::from_word_ids({7, 8, 9, 10, 4}, 5)};
  std::vector<CaptionExample> batch;
  ad::Tensor topic({1, 2});
  for (const auto& c : caps) batch.push_back({random_row(5, rng), topic, &c});
  ad::Tape tape;
  const double loss = cap.caption_loss(tape, batch).item();
  const double lens = 3 + 2 + 5;
  EXPECT_NEAR(loss, lens / (5.0 * 3.0) * std::log(double(v)), 1e-10);
}

TEST(Captioner, LossMatchesHandSum) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ad::ParamStore params(seed);
    auto cfg = tiny_config();
    HierarchicalCaptioner cap(params, 9, 5, cfg);
    scale_params(params, 2.0);
    CaptionerReference ref{params, cfg, 9};
    std::mt19937_64 rng(seed);
    ContextVector ctx{random_row(5, rng)};
    std::vector<Caption> caps{Caption::from_word_ids({4, 5, 6}, 5),
                              Caption::from_word_ids({8}, 5),
                              Caption::from_word_ids({7, 7, 7, 7}, 5)};
    std::vector<ad::Tensor> vis;
    for (int i = 0; i < 3; ++i) vis.push_back(random_row(5, rng));
    ad::Tape tape;
    auto topics = cap.teacher_topics(tape, ctx, caps);
    std::vector<CaptionExample> batch;
    for (std::size_t i = 0; i < 3; ++i) batch.push_back({vis[i], topics[i], &caps[i]});
    const double loss = cap.caption_loss(tape, batch).item();

    auto rt = ref.topics(to_vec(ctx.vector), caps);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(topics[i].at(j), rt[i][j], 1e-14);
    std::vector<Vec> rv;
    for (const auto& v : vis) rv.push_back(to_vec(v));
    EXPECT_NEAR(loss, ref.loss(rv, rt, caps), 1e-10);
  }
}

TEST(Captioner, GreedyMatchesBruteForce) {
  // Five words after the reserved ids.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ad::ParamStore params(seed);
    auto cfg = tiny_config();
    HierarchicalCaptioner cap(params, 9, 5, cfg);
    scale_params(params, 3.0);
    CaptionerReference ref{params, cfg, 9};
    std::mt19937_64 rng(seed);
    ContextVector ctx{random_row(5, rng)};
    std::vector<ProposalFeature> props;
    for (double end : {6.0, 2.0, 4.0}) {
      props.push_back({random_row(5, rng), Segment::from_bounds(end - 1.5, end)});
    }
    ad::Tape tape(ad::Tape::Mode::inference);
    auto out = cap.decode_greedy(tape, props, ctx);

    // CaptionerReference in end order 1, 2, 0 with decoded history.
    Vec h(2, 0), c(2, 0);
    Vec prev(3, 0.0);
    for (std::size_t idx : {1u, 2u, 0u}) {
      ref.lstm(CaptionerReference::cat({prev, to_vec(ctx.vector)}), h, c, "cap.ctrl", 2);
      Caption expect = ref.greedy(to_vec(props[idx].vector), h);
      ASSERT_EQ(out[idx].ids, expect.ids) << "seed " << seed;
      prev = expect.word_ids().empty() ? Vec(3, 0.0) : ref.encode(expect);
    }
    for (const auto& cap_out : out) EXPECT_NO_THROW(cap_out.validate(9));
  }
}

TEST(Captioner, EndTimeOrderTies) {
  std::vector<Segment> segs{Segment::from_bounds(2, 5), Segment::from_bounds(1, 5),
                            Segment::from_bounds(0, 3), Segment::from_bounds(1, 5)};
  EXPECT_EQ(end_time_order(segs), (std::vector<std::size_t>{2, 1, 3, 0}));
}

TEST(Captioner, ControllerHistoryInstrumentation) {
  ad::ParamStore params(4);
  HierarchicalCaptioner cap(params, 9, 5, tiny_config());
  std::mt19937_64 rng(2);
  ContextVector ctx{random_row(5, rng)};
  std::vector<Caption> gt{Caption::from_word_ids({4}, 5), Caption::from_word_ids({5, 6}, 5),
                          Caption::from_word_ids({7}, 5)};
  std::vector<const Caption*> seen;
  ControllerObserver obs = [&](std::size_t, const Caption* c) { seen.push_back(c); };
  ad::Tape tape;
  cap.teacher_topics(tape, ctx, gt, &obs);
  ASSERT_EQ(seen.size(), 3u);
  EXPECT_EQ(seen[0], nullptr);
  EXPECT_EQ(seen[1], &gt[0]);
  EXPECT_EQ(seen[2], &gt[1]);

  std::vector<ProposalFeature> props{{random_row(5, rng), Segment::from_bounds(3, 4)},
                                     {random_row(5, rng), Segment::from_bounds(0, 2)}};
  std::vector<std::vector<int>> history;
  ControllerObserver dec_obs = [&](std::size_t, const Caption* c) {
    history.push_back(c ? c->ids : std::vector<int>{});
  };
  ad::Tape t2(ad::Tape::Mode::inference);
  auto out = cap.decode_greedy(t2, props, ctx, &dec_obs);
  ASSERT_EQ(history.size(), 2u);
  EXPECT_TRUE(history[0].empty());
  EXPECT_EQ(history[1], out[1].ids);  // decoded, not ground truth
}

TEST(Captioner, SingleProposalIgnoresOthers) {
  ad::ParamStore params(6);
  HierarchicalCaptioner cap(params, 9, 5, tiny_config());
  scale_params(params, 3.0);
  std::mt19937_64 rng(3);
  ContextVector ctx{random_row(5, rng)};
  ProposalFeature p{random_row(5, rng), Segment::from_bounds(0, 1)};
  ProposalFeature later{random_row(5, rng), Segment::from_bounds(1, 3)};
  ad::Tape tape(ad::Tape::Mode::inference);
  std::vector<ProposalFeature> one{p}, two{p, later};
  EXPECT_EQ(cap.decode_greedy(tape, one, ctx)[0].ids, cap.decode_greedy(tape, two, ctx)[0].ids);
}

TEST(Captioner, AblationSeversController) {
  ad::ParamStore params(7);
  auto cfg = tiny_config();
  cfg.use_controller = false;
  HierarchicalCaptioner cap(params, 9, 5, cfg);
  EXPECT_FALSE(params.contains("cap.ctrl.w"));
  std::mt19937_64 rng(3);
  ContextVector ctx{random_row(5, rng)};
  std::vector<Caption> gt{Caption::from_word_ids({4}, 5), Caption::from_word_ids({5}, 5)};
  ad::Tape tape;
  for (const auto& t : cap.teacher_topics(tape, ctx, gt)) {
    for (double v : t.values()) EXPECT_EQ(v, 0.0);
  }
  std::vector<ProposalFeature> props{{random_row(5, rng), Segment::from_bounds(0, 2)},
                                     {random_row(5, rng), Segment::from_bounds(1, 3)}};
  auto out = cap.decode_greedy(tape, props, ctx);
  for (const auto& c : out) EXPECT_NO_THROW(c.validate(9));
  EXPECT_THROW(cap.controller_step(tape, cap.zero_sentence(), ctx, cap.initial_controller()),
               ContractError);
}

TEST(Captioner, GradientCheck) {
  ad::ParamStore params(8);
  auto cfg = tiny_config();
  HierarchicalCaptioner cap(params, 8, 5, cfg);
  std::mt19937_64 rng(4);
  ContextVector ctx{random_row(5, rng, true)};
  std::vector<Caption> caps{Caption::from_word_ids({4, 5, 7}, 5), Caption::from_word_ids({6}, 5)};
  std::vector<ad::Tensor> vis{random_row(5, rng, true), random_row(5, rng, true)};
  oracle::NamedTensors check{{"context", ctx.vector}, {"vis0", vis[0]}, {"vis1", vis[1]}};
  for (const auto& n : cap.param_names()) check.emplace_back(n, params.get(n));
  auto result = oracle::check_gradients(
      [&](ad::Tape& tape) {
        auto topics = cap.teacher_topics(tape, ctx, caps);
        std::vector<CaptionExample> batch{{vis[0], topics[0], &caps[0]},
                                          {vis[1], topics[1], &caps[1]}};
        return cap.caption_loss(tape, batch);
      },
      check);
  EXPECT_EQ(result.pass_fraction(), 1.0) << result.worst;
  EXPECT_GT(result.checked, 200u);
}

TEST(Captioner, OverfitMonotone) {
  ad::ParamStore params(9);
  auto cfg = tiny_config();
  cfg.hidden_dim = 8;
  HierarchicalCaptioner cap(params, 9, 5, cfg);
  std::mt19937_64 rng(5);
  ContextVector ctx{random_row(5, rng)};
  std::vector<Caption> caps{Caption::from_word_ids({4, 5, 6}, 5), Caption::from_word_ids({7, 8}, 5)};
  std::vector<ad::Tensor> vis{random_row(5, rng), random_row(5, rng)};
  double prev = INFINITY;
  for (int step = 0; step < 50; ++step) {
    ad::Tape tape;
    auto topics = cap.teacher_topics(tape, ctx, caps);
    std::vector<CaptionExample> batch{{vis[0], topics[0], &caps[0]}, {vis[1], topics[1], &caps[1]}};
    ad::Tensor loss = cap.caption_loss(tape, batch);
    ASSERT_TRUE(std::isfinite(loss.item()));
    ASSERT_LT(loss.item(), prev) << "step " << step;
    prev = loss.item();
    tape.backward(loss);
    for (const auto& n : cap.param_names()) {
      auto& t = params.get(n);
      auto v = t.values_mut();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= 0.5 * t.grad()[i];
    }
  }
}
