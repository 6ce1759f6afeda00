// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Attention cost benchmarks: agent cross-attention against the quadratic
// baseline over a grid of sequence lengths and agent ratios, and the
// agent-ratio sweep on the toy stage-2 task.

#include <cstdint>
#include <string>
#include <vector>

#include "asp/pipeline.hpp"

namespace asp::bench {

struct AttentionBenchOptions {
  std::vector<std::size_t> lengths{256, 512, 1024, 2048, 4096};
  std::vector<double> ratios{0.0016, 0.0025, 0.005, 0.01};
  std::size_t d_model = 64;
  std::size_t conditions = attention::kConditionTokens;
  std::size_t repeats = 3;   // wall time is the minimum over repeats
  std::size_t fixed_agents = 0;  // nonzero: use this agent count for every row
  bool full = true;          // also run the quadratic baseline
  std::uint64_t seed = 42;
  void validate() const;
};

struct AttentionBenchRow {
  std::size_t length = 0;
  double ratio = 0.0;
  std::size_t agents = 0;
  std::uint64_t agent_macs = 0;
  std::uint64_t full_macs = 0;  // zero when the baseline was skipped
  double agent_seconds = 0.0;
  double full_seconds = 0.0;
};

/// One row per (length, ratio) pair, lengths outermost.
std::vector<AttentionBenchRow> bench_attention(const AttentionBenchOptions& options);
std::string attention_csv(const std::vector<AttentionBenchRow>& rows);

/// Least-squares slope of log(y) against log(x).
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

struct RatioRow {
  double ratio = 0.0;
  std::size_t agents = 0;        // agent count on the trained cloud
  std::size_t probe_agents = 0;  // agent count at the throughput probe length
  double esaa_fps = 0.0;         // deform_features evaluations per second at the probe length
  double decoder_fps = 0.0;      // deform_features + deform KAN per second at the probe length
  double test_psnr = 0.0;
  double test_pearson = 0.0;
  double train_seconds = 0.0;
};

struct RatioSweepOptions {
  std::vector<double> ratios{0.0016, 0.0025, 0.005, 0.01};
  std::size_t probe_length = 4096;  // spatial tokens sampled through the trained triplane
  std::size_t probe_rows = 10;      // track rows per throughput measurement
  std::size_t repeats = 7;         // interleaved timing rounds, minimum kept
  bool train = true;                // stage-2 training per ratio for the quality columns
};

/// Agent-ratio sweep on a scene with a stage-1 checkpoint. Throughput is
/// measured at `probe_length` spatial tokens, where distinct ratios give
/// distinct agent counts; quality comes from a stage-2 run per ratio.
std::vector<RatioRow> ratio_sweep(const scene::SyntheticScene& scene, const ParamStore& stage1,
                                  const pipeline::TrainConfig& config, const RatioSweepOptions& options);
std::string ratio_csv(const std::vector<RatioRow>& rows);

}  // namespace asp::bench
