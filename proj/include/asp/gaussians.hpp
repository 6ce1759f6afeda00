// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Gaussian clouds. Networks produce raw rows laid out by ParamLayout; a raw
// row becomes a valid Gaussian through
//
//   mu = raw_mu, s = exp(raw_s), r = raw_r / |raw_r|, sh = raw_sh,
//   alpha = sigmoid(raw_alpha).
//
// Per-frame offsets are added in raw space before activation.

#include <array>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "asp/kan.hpp"
#include "asp/layout.hpp"
#include "asp/ndarray.hpp"
#include "asp/triplane.hpp"

namespace asp::gaussians {

struct Gaussian {
  std::array<double, 3> position{};
  std::array<double, 3> scale{};
  std::array<double, 4> rotation{1.0, 0.0, 0.0, 0.0};  // (w, x, y, z)
  std::vector<double> sh;                              // K RGB triples
  double opacity = 0.0;
};

struct GaussianCloud {
  ParamLayout layout;
  std::vector<Gaussian> items;

  std::size_t size() const { return items.size(); }
  /// Throws ValidationError unless every Gaussian satisfies s > 0,
  /// |r| = 1 +- 1e-9, alpha in [0, 1] and finite values.
  void validate() const;
};

Gaussian activate(std::span<const double> raw, const ParamLayout& layout);
/// Rows of an (N, layout.width()) array.
GaussianCloud activate(const NdArray& raw, const ParamLayout& layout);

/// raw + deltas, element-wise. Throws ValidationError on a cardinality
/// mismatch and ShapeError on a width mismatch.
NdArray compose_raw(const NdArray& raw, const NdArray& deltas);
GaussianCloud compose(const NdArray& raw, const NdArray& deltas, const ParamLayout& layout);

/// Fixed affine map from KAN outputs to raw rows. Positions are offsets from
/// the seed point:
///
///   raw_mu = seed + position_gain * k_mu
///   raw_*  = bias_* + gain_* * k_*
struct StaticHead {
  double position_gain = 0.1;
  double scale_bias = -3.0;
  double scale_gain = 0.5;
  double rotation_gain = 0.5;
  double sh_gain = 1.0;
  double opacity_bias = 0.0;
  double opacity_gain = 1.0;

  /// Per-column gains and biases for a layout.
  NdArray gains(const ParamLayout& layout) const;
  NdArray biases(const ParamLayout& layout) const;
};

/// Static initialization: seeds (N, 3) in [-1, 1]^3 -> raw rows.
class StaticModel {
 public:
  StaticModel(triplane::TriplaneConfig encoder, kan::KanConfig kan, ParamLayout layout, StaticHead head = {});

  const triplane::TriplaneEncoder& encoder() const { return encoder_; }
  const kan::KanNetwork& kan() const { return kan_; }
  const ParamLayout& layout() const { return layout_; }
  const StaticHead& head() const { return head_; }

  void init(ParamStore& store, std::mt19937_64& rng) const;

  /// f_v for the seeds.
  NdArray features(const ParamStore& store, const NdArray& seeds) const;
  NdArray raw(const ParamStore& store, const NdArray& seeds) const;
  ad::Var raw(ad::Graph& g, const ParamStore& store, const NdArray& seeds, bool trainable = true) const;
  /// Seeds as a graph value, so positions of the seeds can be optimized.
  ad::Var raw(ad::Graph& g, const ParamStore& store, ad::Var seeds, bool trainable = true) const;
  GaussianCloud init_static(const ParamStore& store, const NdArray& seeds) const;

 private:
  triplane::TriplaneEncoder encoder_;
  kan::KanNetwork kan_;
  ParamLayout layout_;
  StaticHead head_;
};

/// Stratified samples: the box [lo, hi] is cut into a grid of at least
/// `count` cells, `count` distinct cells are picked and one uniform point
/// is drawn in each.
NdArray stratified_seeds(std::mt19937_64& rng, std::size_t count, const std::array<double, 3>& lo,
                         const std::array<double, 3>& hi);

/// Binary little-endian PLY with the usual 3DGS vertex properties
/// (x y z nx ny nz f_dc_* f_rest_* opacity scale_* rot_*), values raw.
void write_ply(const std::filesystem::path& path, const NdArray& raw, const ParamLayout& layout);
/// Reads a file written by write_ply back into raw rows.
NdArray read_ply(const std::filesystem::path& path, const ParamLayout& layout);

}  // namespace asp::gaussians
