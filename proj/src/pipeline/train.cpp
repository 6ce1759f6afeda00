// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <random>

#include "asp/error.hpp"
#include "asp/pipeline.hpp"

namespace asp::pipeline {
namespace {

void check_loss(double loss, std::size_t it, const char* stage) {
  if (!std::isfinite(loss)) {
    throw NumericError(std::string(stage) + ": non-finite loss at iteration " + std::to_string(it));
  }
}

ad::GradientMap select(ad::GradientMap grads, bool (*keep)(const std::string&), bool keep_other = false,
                       bool (*other)(const std::string&) = nullptr) {
  for (auto it = grads.begin(); it != grads.end();) {
    const bool ok = keep(it->first) || (keep_other && other(it->first));
    it = ok ? std::next(it) : grads.erase(it);
  }
  return grads;
}

// Seeds are ordered by height so that contiguous pooling blocks cover
// horizontal bands of the head.
NdArray ordered_seeds(const NdArray& seeds) {
  std::vector<std::size_t> order(seeds.dim(0));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return seeds(a, 1) > seeds(b, 1); });
  NdArray out(seeds.shape());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t c = 0; c < 3; ++c) out(i, c) = seeds(order[i], c);
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (!(static_lr > 0.0) || !(deform_lr > 0.0)) throw ValidationError("train: learning rates must be positive");
  if (!(seed_lr_scale >= 0.0)) throw ValidationError("train: seed_lr_scale must be non-negative");
  if (!(lr_min_fraction >= 0.0 && lr_min_fraction <= 1.0)) {
    throw ValidationError("train: lr_min_fraction must be in [0, 1]");
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    throw ValidationError("train: invalid Adam hyperparameters");
  }
  weights.validate();
}

ParamStore initialize(const scene::SyntheticScene& scene, const TrainConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const NdArray seeds =
      ordered_seeds(gaussians::stratified_seeds(rng, config.model.gaussians, scene.bounds_lo, scene.bounds_hi));
  return Model(config.model).init(seeds, rng);
}

TrainResult train_static(const scene::SyntheticScene& scene, const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  scene.validate();
  if (scene.track.audio_width != config.model.audio_width) {
    throw ValidationError("train: scene audio width " + std::to_string(scene.track.audio_width) +
                          " differs from model audio_width " + std::to_string(config.model.audio_width));
  }
  TrainResult result;
  result.params = initialize(scene, config);
  const Model model = Model::from_store(result.params);

  Adam adam(config.adam);
  const std::map<std::string, double> scale{{"seeds", config.seed_lr_scale}};
  for (std::size_t it = 0; it < config.static_iterations; ++it) {
    const std::size_t view = it % scene.cameras.size();
    ad::Graph g;
    ad::Var raw = model.static_raw(g, result.params, true);
    ad::Var img = splat::render(raw, model.layout(), scene.cameras[view], scene.background);
    ad::Var gt = g.constant(scene.neutral[view], "gt");
    ad::Var loss = losses::stage1_loss(img, gt, config.weights);
    LossRecord rec;
    rec.iteration = it;
    rec.view = view;
    rec.loss = loss.value().item();
    rec.l1 = losses::l1_loss(img, gt).value().item();
    rec.lr = cosine_lr(config.static_lr, config.lr_min_fraction * config.static_lr, it, config.static_iterations);
    check_loss(rec.loss, it, "stage 1");
    adam.step(result.params, select(g.backward(loss), is_stage1_param), rec.lr, scale);
    result.log.push_back(rec);
    if (progress) progress(rec);
  }
  return result;
}

TrainResult train_deform(const scene::SyntheticScene& scene, const TrainConfig& config, const ParamStore& static_ckpt,
                         const ProgressFn& progress) {
  config.validate();
  scene.validate();
  TrainResult result;
  result.params = static_ckpt;
  const Model model = Model::from_store(result.params);
  if (scene.track.audio_width != model.config().audio_width) {
    throw ValidationError("train: scene audio width " + std::to_string(scene.track.audio_width) +
                          " differs from checkpoint audio_width " + std::to_string(model.config().audio_width));
  }
  const std::size_t train = scene.train_frames();
  if (train == 0) throw ValidationError("train: empty training split");

  const bool finetune = config.finetune_static;
  const NdArray frozen_raw = finetune ? NdArray{} : model.static_raw(result.params);
  const NdArray frozen_features = finetune ? NdArray{} : model.spatial_features(result.params);

  std::mt19937_64 rng(config.seed ^ 0x5eedf00dULL);
  std::uniform_int_distribution<std::size_t> pick(0, train - 1);
  Adam adam(config.adam);
  const std::map<std::string, double> scale{{"seeds", config.seed_lr_scale}};
  for (std::size_t it = 0; it < config.deform_iterations; ++it) {
    const std::size_t t = pick(rng);
    const splat::Camera& cam = scene.cameras[scene.camera_for_frame(t)];
    ad::Graph g;
    ad::Var base, spatial;
    if (finetune) {
      ad::Var seeds = g.parameter(result.params, "seeds", true);
      base = model.static_model().raw(g, result.params, seeds, true);
      spatial = model.static_model().encoder().encode(g, result.params, seeds, true);
    } else {
      base = g.constant(frozen_raw, "static_raw");
      spatial = g.constant(frozen_features, "spatial");
    }
    ad::Var raw = ad::add(base, model.deltas(g, result.params, spatial, scene.track.rows[t], true));
    ad::Var img = splat::render(raw, model.layout(), cam, scene.background);
    ad::Var gt = g.constant(scene.frames[t], "gt");
    ad::Var loss = losses::stage2_loss(img, gt, scene.masks[t], config.weights);
    LossRecord rec;
    rec.iteration = it;
    rec.view = t;
    rec.loss = loss.value().item();
    rec.l1 = losses::l1_loss(img, gt).value().item();
    rec.lr = cosine_lr(config.deform_lr, config.lr_min_fraction * config.deform_lr, it, config.deform_iterations);
    check_loss(rec.loss, it, "stage 2");
    adam.step(result.params, select(g.backward(loss), is_stage2_param, finetune, is_stage1_param), rec.lr, scale);
    result.log.push_back(rec);
    if (progress) progress(rec);
  }
  return result;
}

}  // namespace asp::pipeline
