// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>

#include "asp/error.hpp"
#include "asp/pipeline.hpp"

namespace asp::pipeline {
namespace {

kan::KanConfig static_kan(const ModelConfig& c) {
  kan::KanConfig k;
  k.widths = {c.triplane.output_width(), c.kan_hidden, c.layout().width()};
  k.grid.intervals = c.kan_grid;
  k.grid.order = c.kan_order;
  k.input_scale = c.static_input_scale;
  return k;
}

kan::KanConfig deform_kan_config(const ModelConfig& c) {
  kan::KanConfig k;
  k.widths = {c.agents.d_model, c.kan_hidden, c.layout().width()};
  k.grid.intervals = c.kan_grid;
  k.grid.order = c.kan_order;
  return k;
}

std::size_t meta_count(const ParamStore& store, const std::string& key) {
  const double v = store.meta(key);
  if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("model: meta/" + key + " is not a count");
  return static_cast<std::size_t>(v);
}

}  // namespace

void ModelConfig::validate() const {
  if (gaussians == 0) throw ValidationError("model: gaussians must be positive");
  if (sh_degree < 0 || sh_degree > 3) throw ValidationError("model: sh_degree must be in [0, 3]");
  triplane.validate();
  if (kan_hidden == 0) throw ValidationError("model: kan_hidden must be positive");
  kan::SplineGrid grid;
  grid.intervals = kan_grid;
  grid.order = kan_order;
  grid.validate();
  if (!(static_input_scale > 0.0) || !std::isfinite(static_input_scale)) {
    throw ValidationError("model: static_input_scale must be positive");
  }
  agents.validate();
  if (audio_width == 0) throw ValidationError("model: audio_width must be positive");
  for (double gain : {attention_init.spatial, attention_init.agent, attention_init.fusion}) {
    if (!(gain > 0.0) || !std::isfinite(gain)) throw ValidationError("model: attention init gains must be positive");
  }
}

void ModelConfig::write_meta(ParamStore& store) const {
  store.set_meta("gaussians", static_cast<double>(gaussians));
  store.set_meta("sh_degree", sh_degree);
  store.set_meta("triplane_levels", triplane.levels);
  store.set_meta("triplane_base_resolution", triplane.base_resolution);
  store.set_meta("triplane_growth", triplane.growth_factor);
  store.set_meta("triplane_log2_table_size", triplane.log2_table_size);
  store.set_meta("triplane_features", triplane.features);
  store.set_meta("kan_hidden", static_cast<double>(kan_hidden));
  store.set_meta("kan_grid", kan_grid);
  store.set_meta("kan_order", kan_order);
  store.set_meta("static_input_scale", static_input_scale);
  store.set_meta("head_position_gain", head.position_gain);
  store.set_meta("head_scale_bias", head.scale_bias);
  store.set_meta("head_scale_gain", head.scale_gain);
  store.set_meta("head_rotation_gain", head.rotation_gain);
  store.set_meta("head_sh_gain", head.sh_gain);
  store.set_meta("head_opacity_bias", head.opacity_bias);
  store.set_meta("head_opacity_gain", head.opacity_gain);
  store.set_meta("agent_ratio_ppm", static_cast<double>(std::llround(agents.ratio * 1e6)));
  store.set_meta("d_model", static_cast<double>(agents.d_model));
  store.set_meta("ppe_period", static_cast<double>(agents.period));
  store.set_meta("audio_width", static_cast<double>(audio_width));
}

ModelConfig ModelConfig::from_meta(const ParamStore& store) {
  ModelConfig c;
  c.gaussians = meta_count(store, "gaussians");
  c.sh_degree = static_cast<int>(meta_count(store, "sh_degree"));
  c.triplane.levels = static_cast<int>(meta_count(store, "triplane_levels"));
  c.triplane.base_resolution = static_cast<int>(meta_count(store, "triplane_base_resolution"));
  c.triplane.growth_factor = store.meta("triplane_growth");
  c.triplane.log2_table_size = static_cast<int>(meta_count(store, "triplane_log2_table_size"));
  c.triplane.features = static_cast<int>(meta_count(store, "triplane_features"));
  c.kan_hidden = meta_count(store, "kan_hidden");
  c.kan_grid = static_cast<int>(meta_count(store, "kan_grid"));
  c.kan_order = static_cast<int>(meta_count(store, "kan_order"));
  c.static_input_scale = store.meta("static_input_scale");
  c.head.position_gain = store.meta("head_position_gain");
  c.head.scale_bias = store.meta("head_scale_bias");
  c.head.scale_gain = store.meta("head_scale_gain");
  c.head.rotation_gain = store.meta("head_rotation_gain");
  c.head.sh_gain = store.meta("head_sh_gain");
  c.head.opacity_bias = store.meta("head_opacity_bias");
  c.head.opacity_gain = store.meta("head_opacity_gain");
  c.agents.ratio = static_cast<double>(meta_count(store, "agent_ratio_ppm")) / 1e6;
  c.agents.d_model = meta_count(store, "d_model");
  c.agents.period = static_cast<long>(meta_count(store, "ppe_period"));
  c.audio_width = meta_count(store, "audio_width");
  c.validate();
  return c;
}

namespace {

// Metadata keeps the agent ratio in parts per million; float storage would
// move ratio * N across rounding boundaries (0.005 * 500 = 2.5).
ModelConfig normalized(ModelConfig c) {
  c.validate();
  c.agents.ratio = static_cast<double>(std::llround(c.agents.ratio * 1e6)) / 1e6;
  c.agents.validate();
  return c;
}

}  // namespace

Model::Model(ModelConfig config)
    : config_(normalized(std::move(config))),
      static_(config_.triplane, static_kan(config_), config_.layout(), config_.head),
      deform_("kan_deform", deform_kan_config(config_)) {}

Model Model::from_store(const ParamStore& store) {
  Model m(ModelConfig::from_meta(store));
  if (!store.contains("seeds")) throw ValidationError("model: checkpoint has no seeds");
  const NdArray& seeds = store.at("seeds");
  if (seeds.shape() != Shape{m.config_.gaussians, 3}) {
    throw ShapeError("model: seeds have shape " + shape_string(seeds.shape()));
  }
  return m;
}

ParamStore Model::init(const NdArray& seeds, std::mt19937_64& rng) const {
  if (seeds.shape() != Shape{config_.gaussians, 3}) {
    throw ShapeError("model: seeds must be (" + std::to_string(config_.gaussians) + ", 3), got " +
                     shape_string(seeds.shape()));
  }
  ParamStore store;
  store.set("seeds", seeds);
  static_.init(store, rng);
  attention::init_parameters(store, config_.triplane.output_width(), config_.audio_width, config_.agents, rng,
                              config_.attention_init);
  deform_.init(store, rng, /*zero_last_layer=*/true);
  config_.write_meta(store);
  store.round_to_float();
  return store;
}

NdArray Model::static_raw(const ParamStore& store) const { return static_.raw(store, store.at("seeds")); }

ad::Var Model::static_raw(ad::Graph& g, const ParamStore& store, bool trainable) const {
  return static_.raw(g, store, g.parameter(store, "seeds", trainable), trainable);
}

NdArray Model::spatial_features(const ParamStore& store) const {
  return static_.features(store, store.at("seeds"));
}

ad::Var Model::deltas(ad::Graph& g, const ParamStore& store, ad::Var spatial, const attention::ConditionRow& row,
                      bool trainable) const {
  if (row.audio.size() != config_.audio_width) {
    throw ShapeError("model: audio width " + std::to_string(row.audio.size()) + ", expected " +
                     std::to_string(config_.audio_width));
  }
  ad::Var fd = attention::deform_features(g, store, spatial, row, config_.agents, trainable);
  return kan::map_deform(g, deform_, store, fd, layout(), trainable);
}

NdArray Model::deltas(const ParamStore& store, const NdArray& spatial, const attention::ConditionRow& row) const {
  ad::Graph g;
  return deltas(g, store, g.constant(spatial), row, false).value();
}

NdArray Model::render_static(const ParamStore& store, const splat::Camera& cam, const splat::Rgb& bg) const {
  return splat::render(gaussians::activate(static_raw(store), layout()), cam, bg);
}

bool is_stage1_param(const std::string& name) {
  return name == "seeds" || name.rfind("triplane/", 0) == 0 || name.rfind("kan_static/", 0) == 0;
}

bool is_stage2_param(const std::string& name) {
  return name.rfind("kan_deform/", 0) == 0 || name.rfind("esaa/", 0) == 0 || name.rfind("fusion/", 0) == 0;
}

void Adam::step(ParamStore& store, const ad::GradientMap& grads, double lr,
                const std::map<std::string, double>& lr_scale) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (const auto& [name, grad] : grads) {
    NdArray& p = store.at(name);
    if (grad.shape() != p.shape()) throw ShapeError("adam: gradient shape mismatch for " + name);
    auto [mit, fresh_m] = m_.try_emplace(name, p.shape(), 0.0);
    auto [vit, fresh_v] = v_.try_emplace(name, p.shape(), 0.0);
    (void)fresh_m;
    (void)fresh_v;
    const auto scale_it = lr_scale.find(name);
    const double step = lr * (scale_it == lr_scale.end() ? 1.0 : scale_it->second);
    auto& m = mit->second.storage();
    auto& v = vit->second.storage();
    auto& x = p.storage();
    const auto& gr = grad.storage();
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
      v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
      x[i] = static_cast<float>(x[i] - step * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps));
    }
  }
}

double cosine_lr(double lr0, double lr_min, std::size_t it, std::size_t iterations) {
  if (iterations == 0) return lr0;
  const double phase = static_cast<double>(std::min(it, iterations)) / static_cast<double>(iterations);
  return lr_min + (lr0 - lr_min) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

}  // namespace asp::pipeline
