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
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densecap/eval/dense_eval.hpp"
#include "densecap/model/captioner.hpp"
#include "densecap/model/config.hpp"
#include "densecap/model/encoder.hpp"
#include "densecap/model/soi_pool.hpp"
#include "densecap/model/spn.hpp"
#include "densecap/model/vocabulary.hpp"
#include "densecap/synth/synthdata.hpp"
#include "densecap/tensor/params.hpp"

namespace densecap::train {

struct TrainConfig {
  // Weight of the caption loss in the joint objective.
  double lambda = 1.0;
  double spn_lr = 0.01;
  double captioner_lr = 0.15;
  // Joint-stage learning rate = pretrain rate of each group x joint_decay.
  double joint_decay = 0.1;
  double momentum = 0.9;
  double clip_norm = 5.0;
  // Anchors sampled per SPN step (M).
  std::size_t spn_batch = 32;
  std::size_t caption_batch = 32;
  std::size_t spn_epochs = 10;
  std::size_t captioner_epochs = 300;
  std::size_t joint_epochs = 20;
  std::uint64_t seed = 0;
  bool freeze_encoder = false;
  // Cross-video shuffled caption batches; false gives one video per batch.
  bool shuffle_captions = true;

  // ContractError on a violated invariant.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

enum class Stage { init, spn, captioner, joint };
std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

/// All trainable modules over one parameter store. Parameter names are
/// prefixed "encoder.", "spn.", "fc6." and "cap.".
class Model {
 public:
  Model(const ModelConfig& config, Vocabulary vocab, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;

  ad::ParamStore& params() { return params_; }
  const ad::ParamStore& params() const { return params_; }
  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const VideoEncoder& encoder() const { return encoder_; }
  const SegmentProposalNetwork& spn() const { return spn_; }
  const SoiFeatureHead& head() const { return head_; }
  const HierarchicalCaptioner& captioner() const { return captioner_; }

  // Names of the parameters whose name starts with any of the prefixes.
  std::vector<std::string> group(std::initializer_list<std::string_view> prefixes) const;

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ad::ParamStore params_;
  VideoEncoder encoder_;
  SegmentProposalNetwork spn_;
  SoiFeatureHead head_;
  HierarchicalCaptioner captioner_;
};

/// Everything needed to rebuild a model and continue its stage.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  Stage stage = Stage::init;
  ModelConfig model;
  TrainConfig train;
  Vocabulary vocab;
  // Steps finished in this stage and whether the stage ran to completion.
  std::size_t step = 0;
  bool complete = false;
  std::map<std::string, ad::Tensor> params;
  // Optimizer velocity per parameter name.
  std::map<std::string, ad::Tensor> momentum;
  // Run configuration snapshot supplied by the caller.
  nlohmann::json run_config = nlohmann::json::object();
};

// "JEDN", u32 version, u64 length + config JSON, u32 count, then per tensor
// u32 name length, name, u32 rank, u64 dims, little-endian doubles.
std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source = "checkpoint");
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Fresh stage-"init" checkpoint; parameters seeded by train.seed.
Checkpoint initial_checkpoint(const ModelConfig& model, const Vocabulary& vocab,
                              const TrainConfig& train);
Model model_from(const Checkpoint& c);
// The same checkpoint for another model configuration: parameters whose name
// and shape agree are kept, the rest freshly initialized; momentum is reset.
Checkpoint retarget(const Checkpoint& c, const ModelConfig& model);
// Copies the model's parameter values into c.params.
void store_params(const Model& model, Checkpoint& c);

// Classical momentum: v = momentum * v + g; p -= lr * v.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum);
// Scales gradients of the named parameters so their joint L2 norm is at most
// max_norm. Returns the norm before clipping.
double clip_grad_norm(ad::ParamStore& params, const std::vector<std::string>& names, double max_norm);

// A dataset video prepared for the model: normalized frames, ground truth in
// feature timesteps and captions, all in ascending end-time order.
struct PreparedVideo {
  std::string id;
  VideoTensor video;
  double duration = 0.0;  // seconds
  double timesteps_per_second = 1.0;
  std::vector<Segment> segments;  // feature timesteps
  std::vector<Caption> captions;
  std::vector<std::vector<std::string>> words;
};

// Vocabulary over every caption word (min count 1).
Vocabulary build_vocabulary(const std::vector<synth::VideoRecord>& videos);
// Segments outside the video are clipped with a warning; DataError for videos
// without ground truth.
std::vector<PreparedVideo> prepare(const std::vector<synth::VideoRecord>& videos,
                                   const Vocabulary& vocab, const ModelConfig& model);
eval::GroundTruth ground_truth(const std::vector<synth::VideoRecord>& videos);

struct LogRow {
  std::string stage;
  std::size_t step = 0;
  double spn = 0.0;
  double caption = 0.0;
  double total = 0.0;
};
std::string log_header();
std::string to_csv(const LogRow& r);

struct RunControl {
  // Stop after this many steps in this call (for interrupted runs).
  std::size_t max_steps = SIZE_MAX;
  std::function<void(const LogRow&)> on_step;
};

struct StageResult {
  Checkpoint checkpoint;
  std::vector<LogRow> log;
};

// Optimizes L_spn only, one video per step. `start` is an init checkpoint or
// an incomplete spn checkpoint to resume.
StageResult pretrain_spn(const std::vector<PreparedVideo>& videos, const Checkpoint& start,
                         const TrainConfig& config, const RunControl& control = {});

// Mean L_spn over every non-ignored anchor of the videos.
double spn_eval_loss(const Model& model, const std::vector<PreparedVideo>& videos);

struct FeatureRecord {
  std::string video_id;
  std::size_t index = 0;  // end-time rank within the video
  Segment segment;        // feature timesteps
  Caption caption;
  std::vector<double> feature;
};

struct FeatureDump {
  static constexpr std::uint32_t kFormatVersion = 1;
  std::vector<std::string> vocab_words;
  std::size_t dim = 0;
  std::size_t max_len = 0;
  std::map<std::string, std::vector<double>> contexts;
  std::vector<FeatureRecord> records;
};

// Ground-truth proposal features and per-video context from a trained SPN.
FeatureDump extract_gt_features(const Checkpoint& spn, const std::vector<PreparedVideo>& videos);
// "JEDF", u32 version, u64 length + header JSON, then contexts and records.
std::string serialize_feature_dump(const FeatureDump& d);
FeatureDump deserialize_feature_dump(const std::string& bytes, const std::string& source = "features");
void save_feature_dump(const std::filesystem::path& path, const FeatureDump& d);
FeatureDump load_feature_dump(const std::filesystem::path& path);

// The batches (record indices) of one captioner epoch.
std::vector<std::vector<std::size_t>> caption_batches(const FeatureDump& dump,
                                                      const TrainConfig& config, std::size_t epoch);

// Optimizes L_caption on frozen features. `start` is a complete spn
// checkpoint or an incomplete captioner checkpoint.
StageResult pretrain_captioner(const FeatureDump& dump, const Checkpoint& start,
                               const TrainConfig& config, const RunControl& control = {});

// Mean L_caption over the dump with teacher histories, one video at a time.
double caption_eval_loss(const Model& model, const FeatureDump& dump);

// L_total = L_spn + lambda L_caption, one video per step, everything unfrozen
// trained at the decayed rate. Encoder, SPN and fc6 come from `spn`, the
// captioner from `captioner`; `resume` continues an incomplete joint run.
StageResult train_joint(const std::vector<PreparedVideo>& videos, const Checkpoint& spn,
                        const Checkpoint& captioner, const TrainConfig& config,
                        const RunControl& control = {}, const Checkpoint* resume = nullptr);

// Losses of one joint step, and gradients left on the model's parameters.
struct JointLosses {
  double spn = 0.0;
  double caption = 0.0;
  double total = 0.0;
};
JointLosses joint_losses(Model& model, const PreparedVideo& video, double lambda,
                         std::uint64_t sample_seed, std::size_t anchors,
                         const ControllerObserver* observer = nullptr);

struct InferenceOptions {
  double nms_threshold = 0.7;
  std::size_t top_k = 1000;
};

// Proposals (seconds) with captions decoded in end-time order.
std::vector<eval::Prediction> infer_video(const Model& model, const PreparedVideo& video,
                                          const InferenceOptions& options = {});
eval::PredictionSet infer(const Model& model, const std::vector<PreparedVideo>& videos,
                          const InferenceOptions& options = {});
// Captions decoded for the given segments (feature timesteps) with the
// model's own history.
std::vector<std::vector<std::string>> caption_segments(const Model& model, const PreparedVideo& video,
                                                       const std::vector<Segment>& segments);

std::string join_words(const std::vector<std::string>& words);

}  // namespace densecap::train
