// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Spatial-audio attention through agent tokens.
//
//   agents   A   = MLP(pool_n(X))                       (n x d)
//   aggregate V_A = SDP(A, C, C)                         (n x d)
//   broadcast Y   = SDP(X, A, V_A)                       (N x d)
//
// X are the projected spatial features, C the condition tokens. Cost is
// O(N n d + n M d) instead of the O(N^2 d) of full spatial attention.
//
// Parameters: "esaa/proj_{w,b}", "esaa/agent_{w1,b1,w2,b2}",
// "fusion/{audio,blink,pose}_{w,b}", "fusion/null_token".

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "asp/graph.hpp"
#include "asp/param_store.hpp"

namespace asp::attention {

inline constexpr std::size_t kPoseWidth = 6;
inline constexpr std::size_t kConditionTokens = 4;

/// One frame of conditioning signals.
struct ConditionRow {
  std::vector<double> audio;        // f_a
  double blink = 0.0;               // f_e in [0, 1]
  std::array<double, kPoseWidth> pose{};  // rotation vector (3) + translation (3)
  long timestep = 0;
};

struct ConditionTrack {
  std::size_t audio_width = 0;
  std::vector<ConditionRow> rows;

  std::size_t size() const { return rows.size(); }
  /// Equal audio widths, blink within [0, 1], finite values.
  void validate() const;
};

struct AgentConfig {
  double ratio = 0.005;
  std::size_t d_model = 64;
  long period = 25;

  /// max(1, round(ratio * N)).
  std::size_t agent_count(std::size_t spatial_length) const;
  void validate() const;
};

/// Multiply-accumulate counter for the attention paths (per thread).
void reset_mac_count();
std::uint64_t mac_count();

/// Softmax(Q K^T / sqrt(d)) V.
ad::Var sdp(ad::Var q, ad::Var k, ad::Var v);
NdArray sdp(const NdArray& q, const NdArray& k, const NdArray& v);

/// Periodic positional encoding of width d: sin at even, cos at odd coordinates
/// of (t mod period) / 10000^(2i/d).
std::vector<double> ppe(long t, std::size_t d_model, long period);

/// Mean of n contiguous row blocks.
ad::Var pool_tokens(ad::Var features, std::size_t n);
/// Agent tokens: pooled tokens through the two-layer perceptron.
ad::Var make_agents(ad::Graph& g, const ParamStore& store, ad::Var features, std::size_t n, bool trainable = true);

/// Agent aggregation followed by agent broadcast.
ad::Var agent_cross_attention(ad::Graph& g, const ParamStore& store, ad::Var features, ad::Var cond, std::size_t n,
                              bool trainable = true);

/// Quadratic baseline: spatial self-attention followed by cross-attention to
/// the condition tokens, SDP(SDP(X, X, X), C, C).
ad::Var full_cross_attention(ad::Var features, ad::Var cond);

/// [proj(f_a); proj(f_e); proj(f_p); null_token] + PPE(t) on every row.
ad::Var fuse_conditions(ad::Graph& g, const ParamStore& store, const ConditionRow& row, const AgentConfig& config,
                        bool trainable = true);

/// Spatial projection P(f_v) = f_v W + b to d_model.
ad::Var project_spatial(ad::Graph& g, const ParamStore& store, ad::Var spatial, bool trainable = true);

/// Audio-aware spatial features f_d = ESAA(P(f_v), fuse_conditions(row)).
ad::Var deform_features(ad::Graph& g, const ParamStore& store, ad::Var spatial, const ConditionRow& row,
                        const AgentConfig& config, bool trainable = true);

/// Weight bounds are gain / sqrt(fan_in). Larger gains start the agent
/// attention away from the uniform distribution.
struct InitGains {
  double spatial = 1.0;  // esaa/proj_w
  double agent = 1.0;    // esaa/agent_w1, esaa/agent_w2
  double fusion = 1.0;   // fusion/*_w
};

/// Initializes the esaa/ and fusion/ parameters: weights uniform, biases and
/// the null token zero.
void init_parameters(ParamStore& store, std::size_t spatial_width, std::size_t audio_width,
                     const AgentConfig& config, std::mt19937_64& rng, const InitGains& gains = {});

}  // namespace asp::attention
