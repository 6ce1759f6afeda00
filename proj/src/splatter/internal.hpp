// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "asp/splatter.hpp"

namespace asp::splat::detail {

// Intermediates of one projection, kept for the backward pass.
struct Projection {
  Splat2D splat;
  Vec3 t{};                  // camera-space mean
  double m[2][3]{};          // J * W
  Mat3 rq{};                 // rotation from the unit quaternion
  Mat3 sigma{};              // 3D covariance
  Vec3 dir{};                // unit view direction
  double view_distance = 0;  // |mu - camera center|
  std::vector<double> basis;
  Rgb unclamped{};
};

std::optional<Projection> project_full(const gaussians::Gaussian& g, std::size_t index, int sh_degree,
                                  const Camera& cam, const RenderOptions& opts);

// Per-splat screen-space gradient.
struct SplatGrad {
  std::array<double, 2> mean{};
  std::array<double, 3> conic{};
  double opacity = 0;
  Rgb color{};
};

/// Chains a screen-space gradient back to the raw parameter row.
void project_backward(std::span<const double> raw, const ParamLayout& layout, const Camera& cam,
                      const RenderOptions& opts, const SplatGrad& grad, std::span<double> d_raw);

struct TileLists {
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::size_t> offsets;  // tiles + 1
  std::vector<std::uint32_t> entries;  // splat positions in depth order
};

TileLists build_tiles(const std::vector<Splat2D>& splats, const Camera& cam, const RenderOptions& opts);

}  // namespace asp::splat::detail
