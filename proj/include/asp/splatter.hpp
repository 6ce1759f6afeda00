// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// CPU Gaussian splatting.
//
// Pixel (x, y) has its center at integer coordinates. A splat contributes
//
//   alpha_i = opacity_i * exp(-0.5 * d^T conic_i d),   d = pixel - mean_i
//
// and pixels composite front to back, C = sum c_i alpha_i T_i + T_end * bg,
// with T_i = prod_{j<i} (1 - alpha_j). The tiled rasterizer stops a pixel
// once T drops below the termination threshold and only visits splats whose
// cutoff ellipse (alpha < cutoff_alpha) overlaps the tile.

#include <array>
#include <optional>
#include <vector>

#include "asp/gaussians.hpp"
#include "asp/graph.hpp"

namespace asp::splat {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;
using Rgb = std::array<double, 3>;

struct Camera {
  double fx = 64.0, fy = 64.0, cx = 32.0, cy = 32.0;
  int width = 64, height = 64;
  Mat3 rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};  // world to camera
  Vec3 translation{0, 0, 0};

  /// Camera looking from `eye` at `target`; camera +y points along -up
  /// (image rows grow downward), +z forward.
  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height);

  Vec3 to_camera(const Vec3& world) const;
  Vec3 center() const;
  void validate() const;
};

struct RenderOptions {
  double cov_floor = 0.3;
  double near = 0.01;
  double termination = 1e-4;
  double cutoff_alpha = 1e-8;
  double frustum_margin = 1.3;
  int tile = 16;
  bool checked = false;
};

struct Splat2D {
  std::size_t index = 0;  // source Gaussian
  std::array<double, 2> mean{};
  std::array<double, 3> cov{};    // (xx, xy, yy), floor included
  std::array<double, 3> conic{};  // inverse of cov, same packing
  double depth = 0.0;
  Rgb color{};
  double opacity = 0.0;
  std::array<int, 4> rect{};  // pixel bounds x0, y0, x1, y1 (exclusive) of the cutoff ellipse
};

/// Real SH basis (degree <= 3, (degree + 1)^2 values) at a unit direction.
std::vector<double> sh_basis(int degree, const Vec3& dir);
/// d basis_k / d dir, row-major ((degree + 1)^2, 3).
std::vector<double> sh_basis_jacobian(int degree, const Vec3& dir);
/// Color along `dir`: sum_k basis_k sh_k + 0.5, clamped at zero.
Rgb eval_sh(int degree, const std::vector<double>& sh, const Vec3& dir);

Mat3 quaternion_to_matrix(const std::array<double, 4>& q);

/// nullopt when culled (depth <= near or outside the frustum margin).
std::optional<Splat2D> project(const gaussians::Gaussian& g, std::size_t index, int sh_degree, const Camera& cam,
                               const RenderOptions& opts = {});
/// Projects every Gaussian and sorts by depth (stable, ties in index order).
std::vector<Splat2D> project_cloud(const gaussians::GaussianCloud& cloud, const Camera& cam,
                                   const RenderOptions& opts = {});

/// Tiled front-to-back compositing, (H, W, 3). In checked mode unsorted
/// input is rejected.
NdArray rasterize(const std::vector<Splat2D>& splats, const Camera& cam, const Rgb& background,
                  const RenderOptions& opts = {});
/// Every pixel against every splat, no tiling and no early termination.
NdArray rasterize_reference(const std::vector<Splat2D>& splats, const Camera& cam, const Rgb& background,
                            const RenderOptions& opts = {});

NdArray render(const gaussians::GaussianCloud& cloud, const Camera& cam, const Rgb& background,
               const RenderOptions& opts = {});

/// Differentiable render of raw Gaussian rows (N, layout.width()) -> (H, W, 3).
ad::Var render(ad::Var raw, const ParamLayout& layout, const Camera& cam, const Rgb& background,
               const RenderOptions& opts = {});

}  // namespace asp::splat
