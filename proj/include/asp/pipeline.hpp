// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Two-stage talking-head model: a static cloud from seeds through the
// triplane and the static KAN, and per-frame raw offsets
//
//   deltas(t) = KAN_deform(ESAA(P(f_v), fuse_conditions(track[t])))
//
// added to the static raw rows before activation and splatting.
//
// Parameter groups: "seeds", "triplane/", "kan_static/" (stage 1) and
// "kan_deform/", "esaa/", "fusion/" (stage 2). Model hyperparameters travel
// with the parameters as "meta/..." entries.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "asp/attention.hpp"
#include "asp/gaussians.hpp"
#include "asp/losses.hpp"
#include "asp/scene.hpp"
#include "asp/splatter.hpp"

namespace asp::pipeline {

struct ModelConfig {
  std::size_t gaussians = 500;
  int sh_degree = 1;
  triplane::TriplaneConfig triplane;
  std::size_t kan_hidden = 64;
  int kan_grid = 5;
  int kan_order = 3;
  double static_input_scale = 4.0;
  gaussians::StaticHead head;
  attention::AgentConfig agents;
  std::size_t audio_width = 8;
  // Initialization only, not part of the checkpoint metadata.
  attention::InitGains attention_init{8.0, 3.0, 1.0};

  ParamLayout layout() const { return ParamLayout{sh_degree}; }
  void validate() const;
  void write_meta(ParamStore& store) const;
  static ModelConfig from_meta(const ParamStore& store);
};

class Model {
 public:
  explicit Model(ModelConfig config);
  /// Rebuilds the model from the metadata of a parameter store.
  static Model from_store(const ParamStore& store);

  const ModelConfig& config() const { return config_; }
  ParamLayout layout() const { return config_.layout(); }
  const gaussians::StaticModel& static_model() const { return static_; }
  const kan::KanNetwork& deform_kan() const { return deform_; }

  /// Fresh parameters (seeds, stage-1 and stage-2 groups, metadata), all
  /// rounded to float. The deform KAN starts as the zero function.
  ParamStore init(const NdArray& seeds, std::mt19937_64& rng) const;

  NdArray static_raw(const ParamStore& store) const;
  ad::Var static_raw(ad::Graph& g, const ParamStore& store, bool trainable) const;
  /// f_v at the seeds.
  NdArray spatial_features(const ParamStore& store) const;

  ad::Var deltas(ad::Graph& g, const ParamStore& store, ad::Var spatial, const attention::ConditionRow& row,
                 bool trainable) const;
  NdArray deltas(const ParamStore& store, const NdArray& spatial, const attention::ConditionRow& row) const;

  NdArray render_static(const ParamStore& store, const splat::Camera& cam, const splat::Rgb& bg) const;

 private:
  ModelConfig config_;
  gaussians::StaticModel static_;
  kan::KanNetwork deform_;
};

/// Parameter groups trained by each stage.
bool is_stage1_param(const std::string& name);
bool is_stage2_param(const std::string& name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. After each step parameters are rounded to
/// float so that checkpoints reproduce the in-memory state exactly.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  /// `lr_scale` multiplies the learning rate of individual parameters.
  void step(ParamStore& store, const ad::GradientMap& grads, double lr,
            const std::map<std::string, double>& lr_scale = {});
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::map<std::string, NdArray> m_, v_;
};

/// lr_min + (lr0 - lr_min) (1 + cos(pi it / iterations)) / 2.
double cosine_lr(double lr0, double lr_min, std::size_t it, std::size_t iterations);

struct TrainConfig {
  ModelConfig model;
  std::size_t static_iterations = 2000;
  std::size_t deform_iterations = 3000;
  double static_lr = 5e-3;
  double deform_lr = 1e-3;
  double seed_lr_scale = 0.2;  // learning-rate multiplier for seed positions
  double lr_min_fraction = 0.01;
  AdamConfig adam;
  losses::LossWeights weights;
  bool finetune_static = false;
  std::uint64_t seed = 42;

  void validate() const;
};

struct LossRecord {
  std::size_t iteration = 0;
  std::size_t view = 0;  // camera (stage 1) or frame (stage 2)
  double loss = 0.0;
  double l1 = 0.0;
  double lr = 0.0;
};

using ProgressFn = std::function<void(const LossRecord&)>;

struct TrainResult {
  ParamStore params;
  std::vector<LossRecord> log;
};

/// Initial parameters for a scene: stratified seeds in the scene's seed box,
/// ordered by descending height, then Model::init.
ParamStore initialize(const scene::SyntheticScene& scene, const TrainConfig& config);

/// Stage 1: seeds, triplane and static KAN against stage1_loss on the
/// neutral views, cycling through the ring cameras.
TrainResult train_static(const scene::SyntheticScene& scene, const TrainConfig& config,
                         const ProgressFn& progress = {});
/// Stage 2: deform KAN, ESAA and fusion against stage2_loss on frames drawn
/// uniformly from the training split.
TrainResult train_deform(const scene::SyntheticScene& scene, const TrainConfig& config, const ParamStore& static_ckpt,
                         const ProgressFn& progress = {});

/// Raw rows of every frame (static + deltas).
std::vector<NdArray> sequence_raw(const ParamStore& store, const attention::ConditionTrack& track);
/// Frame t is rendered by cameras[t mod cameras.size()].
std::vector<NdArray> render_sequence(const ParamStore& store, const attention::ConditionTrack& track,
                                     const std::vector<splat::Camera>& cameras, const splat::Rgb& background);

double mse(const NdArray& a, const NdArray& b);
/// 10 log10(1 / MSE); +infinity for identical images.
double psnr(const NdArray& a, const NdArray& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

/// Learned Gaussians standing in for each landmark: the `per_landmark`
/// static Gaussians nearest to its rest position.
struct Markers {
  std::vector<std::vector<std::size_t>> members;
};
Markers select_markers(const NdArray& static_raw, const NdArray& landmarks_rest, std::size_t per_landmark = 4);
/// Projected marker positions (landmarks, 2) for one frame's raw rows.
NdArray marker_pixels(const Markers& markers, const NdArray& raw, const splat::Camera& cam);

struct FrameMetrics {
  std::size_t frame = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double keypoint_distance = 0.0;
  // Upper-to-lower lip marker distance in pixels. evaluate_model reports it
  // relative to the static cloud seen by the same camera.
  double aperture_proxy = 0.0;
  double audio0 = 0.0;
};

struct EvalReport {
  std::vector<FrameMetrics> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  double mean_keypoint_distance = 0.0;
  double aperture_pearson = 0.0;  // over the evaluated frames
};

/// Image metrics of rendered frames against ground truth plus keypoint
/// distances. Throws ValidationError on length mismatches.
EvalReport evaluate(const std::vector<NdArray>& frames, const std::vector<NdArray>& gt,
                    const std::vector<NdArray>& rendered_keypoints, const std::vector<NdArray>& gt_keypoints);

/// Full model evaluation on frames [begin, end) of a scene.
EvalReport evaluate_model(const ParamStore& store, const scene::SyntheticScene& scene, std::size_t begin,
                          std::size_t end);

}  // namespace asp::pipeline
