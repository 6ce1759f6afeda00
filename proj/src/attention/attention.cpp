// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/attention.hpp"

#include <cmath>

#include "asp/error.hpp"

namespace asp::attention {
namespace {

thread_local std::uint64_t g_macs = 0;

NdArray row_matrix(const std::vector<double>& v) { return NdArray(Shape{1, v.size()}, v); }

ad::Var affine(ad::Graph& g, const ParamStore& store, ad::Var x, const std::string& w, const std::string& b,
               bool trainable) {
  ad::Var wv = g.parameter(store, w, trainable);
  ad::Var bv = g.parameter(store, b, trainable);
  if (x.shape().size() != 2 || wv.shape().size() != 2 || x.shape()[1] != wv.shape()[0]) {
    throw ShapeError("affine: input " + g.describe(x) + " does not match weight " + g.describe(wv));
  }
  g_macs += x.shape()[0] * wv.shape()[0] * wv.shape()[1];
  return ad::add(ad::matmul(x, wv), bv);
}

}  // namespace

void ConditionTrack::validate() const {
  for (const auto& r : rows) {
    if (r.audio.size() != audio_width) throw ShapeError("condition track: audio width mismatch");
    if (!(r.blink >= 0.0 && r.blink <= 1.0)) throw ValidationError("condition track: blink outside [0, 1]");
    for (double v : r.audio)
      if (!std::isfinite(v)) throw ValidationError("condition track: non-finite audio value");
    for (double v : r.pose)
      if (!std::isfinite(v)) throw ValidationError("condition track: non-finite pose value");
  }
}

std::size_t AgentConfig::agent_count(std::size_t spatial_length) const {
  const auto n = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(spatial_length)));
  return std::max<std::size_t>(1, n);
}

void AgentConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ValidationError("agent ratio must be in (0, 1]");
  if (d_model == 0) throw ValidationError("d_model must be positive");
  if (period < 1) throw ValidationError("PPE period must be >= 1");
}

void reset_mac_count() { g_macs = 0; }
std::uint64_t mac_count() { return g_macs; }

ad::Var sdp(ad::Var q, ad::Var k, ad::Var v) {
  ad::Graph& g = q.graph();
  const Shape& qs = q.shape();
  const Shape& ks = k.shape();
  const Shape& vs = v.shape();
  if (qs.size() != 2 || ks.size() != 2 || vs.size() != 2) throw ShapeError("sdp: operands must be rank 2");
  const std::size_t d = qs[1];
  if (d == 0) throw ValidationError("sdp: key width is zero");
  if (ks[1] != d || vs[0] != ks[0]) {
    throw ShapeError("sdp: Q " + g.describe(q) + ", K " + g.describe(k) + ", V " + g.describe(v));
  }
  g_macs += qs[0] * ks[0] * d + qs[0] * ks[0] * vs[1];
  ad::Var logits = ad::scale(ad::matmul(q, k, ad::Transpose::No, ad::Transpose::Yes), 1.0 / std::sqrt(double(d)));
  return ad::matmul(ad::softmax_rows(logits), v);
}

NdArray sdp(const NdArray& q, const NdArray& k, const NdArray& v) {
  ad::Graph g;
  return sdp(g.constant(q), g.constant(k), g.constant(v)).value();
}

std::vector<double> ppe(long t, std::size_t d_model, long period) {
  if (period < 1) throw ValidationError("ppe: period must be >= 1");
  long m = t % period;
  if (m < 0) m += period;
  const double phase = static_cast<double>(m);
  std::vector<double> out(d_model);
  for (std::size_t c = 0; c < d_model; ++c) {
    const std::size_t i = c / 2;
    const double arg = phase / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d_model));
    out[c] = (c % 2 == 0) ? std::sin(arg) : std::cos(arg);
  }
  return out;
}

ad::Var pool_tokens(ad::Var features, std::size_t n) {
  if (features.shape().size() != 2) throw ShapeError("pool_tokens: expected rank 2");
  const std::size_t N = features.shape()[0];
  if (n == 0 || n > N) {
    throw ValidationError("make_agents: agent count " + std::to_string(n) + " not in [1, " + std::to_string(N) + "]");
  }
  g_macs += N * features.shape()[1];
  return ad::group_mean_rows(features, n);
}

ad::Var make_agents(ad::Graph& g, const ParamStore& store, ad::Var features, std::size_t n, bool trainable) {
  ad::Var pooled = pool_tokens(features, n);
  ad::Var hidden = ad::silu(affine(g, store, pooled, "esaa/agent_w1", "esaa/agent_b1", trainable));
  return affine(g, store, hidden, "esaa/agent_w2", "esaa/agent_b2", trainable);
}

ad::Var agent_cross_attention(ad::Graph& g, const ParamStore& store, ad::Var features, ad::Var cond, std::size_t n,
                              bool trainable) {
  if (cond.shape().size() != 2 || cond.shape()[0] == 0) throw ValidationError("agent attention: empty conditions");
  if (features.shape().size() != 2 || cond.shape()[1] != features.shape()[1]) {
    throw ShapeError("agent attention: width mismatch between " + g.describe(features) + " and " + g.describe(cond));
  }
  ad::Var agents = make_agents(g, store, features, n, trainable);
  ad::Var aggregated = sdp(agents, cond, cond);
  return sdp(features, agents, aggregated);
}

ad::Var full_cross_attention(ad::Var features, ad::Var cond) {
  return sdp(sdp(features, features, features), cond, cond);
}

ad::Var fuse_conditions(ad::Graph& g, const ParamStore& store, const ConditionRow& row, const AgentConfig& config,
                        bool trainable) {
  const std::size_t d = config.d_model;
  ad::Var audio = affine(g, store, g.constant(row_matrix(row.audio), "f_a"), "fusion/audio_w", "fusion/audio_b",
                         trainable);
  ad::Var blink = affine(g, store, g.constant(NdArray::matrix(1, 1, {row.blink}), "f_e"), "fusion/blink_w",
                         "fusion/blink_b", trainable);
  ad::Var pose = affine(g, store, g.constant(row_matrix({row.pose.begin(), row.pose.end()}), "f_p"),
                        "fusion/pose_w", "fusion/pose_b", trainable);
  ad::Var null_token = ad::reshape(g.parameter(store, "fusion/null_token", trainable), {1, d});
  ad::Var tokens = ad::concat({audio, blink, pose, null_token}, 0);
  if (tokens.shape()[1] != d) throw ShapeError("fuse_conditions: projection width differs from d_model");
  return ad::add(tokens, g.constant(row_matrix(ppe(row.timestep, d, config.period)), "ppe"));
}

ad::Var project_spatial(ad::Graph& g, const ParamStore& store, ad::Var spatial, bool trainable) {
  return affine(g, store, spatial, "esaa/proj_w", "esaa/proj_b", trainable);
}

ad::Var deform_features(ad::Graph& g, const ParamStore& store, ad::Var spatial, const ConditionRow& row,
                        const AgentConfig& config, bool trainable) {
  ad::Var projected = project_spatial(g, store, spatial, trainable);
  ad::Var cond = fuse_conditions(g, store, row, config, trainable);
  const std::size_t n = config.agent_count(projected.shape()[0]);
  return agent_cross_attention(g, store, projected, cond, n, trainable);
}

void init_parameters(ParamStore& store, std::size_t spatial_width, std::size_t audio_width,
                     const AgentConfig& config, std::mt19937_64& rng, const InitGains& gains) {
  config.validate();
  const std::size_t d = config.d_model;
  auto uniform = [&](Shape shape, std::size_t fan_in, double gain) {
    const double bound = gain / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    NdArray a(std::move(shape));
    for (double& v : a.data()) v = dist(rng);
    return a;
  };
  store.set("esaa/proj_w", uniform({spatial_width, d}, spatial_width, gains.spatial));
  store.set("esaa/proj_b", NdArray(Shape{d}, 0.0));
  store.set("esaa/agent_w1", uniform({d, d}, d, gains.agent));
  store.set("esaa/agent_b1", NdArray(Shape{d}, 0.0));
  store.set("esaa/agent_w2", uniform({d, d}, d, gains.agent));
  store.set("esaa/agent_b2", NdArray(Shape{d}, 0.0));
  store.set("fusion/audio_w", uniform({audio_width, d}, audio_width, gains.fusion));
  store.set("fusion/audio_b", NdArray(Shape{d}, 0.0));
  store.set("fusion/blink_w", uniform({1, d}, 1, gains.fusion));
  store.set("fusion/blink_b", NdArray(Shape{d}, 0.0));
  store.set("fusion/pose_w", uniform({kPoseWidth, d}, kPoseWidth, gains.fusion));
  store.set("fusion/pose_b", NdArray(Shape{d}, 0.0));
  store.set("fusion/null_token", NdArray(Shape{d}, 0.0));
}

}  // namespace asp::attention
