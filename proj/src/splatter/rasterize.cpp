// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <memory>

#include "asp/error.hpp"
#include "asp/parallel.hpp"
#include "internal.hpp"

namespace asp::splat {
namespace {

inline double splat_alpha(const Splat2D& s, double px, double py) {
  const double dx = px - s.mean[0], dy = py - s.mean[1];
  const double q = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
  return s.opacity * std::exp(-0.5 * q);
}

void check_sorted(const std::vector<Splat2D>& splats) {
  for (std::size_t i = 1; i < splats.size(); ++i) {
    if (splats[i].depth < splats[i - 1].depth) {
      throw ValidationError("rasterize: splats are not depth-sorted (position " + std::to_string(i) + ")");
    }
  }
}

struct TileBounds {
  int x0, y0, x1, y1;
};

TileBounds tile_bounds(const detail::TileLists& tiles, std::size_t t, const Camera& cam, int tile) {
  const int tx = static_cast<int>(t % static_cast<std::size_t>(tiles.tiles_x));
  const int ty = static_cast<int>(t / static_cast<std::size_t>(tiles.tiles_x));
  return {tx * tile, ty * tile, std::min(cam.width, (tx + 1) * tile), std::min(cam.height, (ty + 1) * tile)};
}

// Composites one tile; `counts` (optional) receives the number of splats
// each pixel consumed.
void composite_tile(const std::vector<Splat2D>& splats, const detail::TileLists& tiles, std::size_t t,
                    const Camera& cam, const Rgb& bg, const RenderOptions& opts, NdArray& image,
                    std::vector<std::uint32_t>* counts) {
  const TileBounds b = tile_bounds(tiles, t, cam, opts.tile);
  const std::size_t begin = tiles.offsets[t], end = tiles.offsets[t + 1];
  auto data = image.data();
  for (int y = b.y0; y < b.y1; ++y) {
    for (int x = b.x0; x < b.x1; ++x) {
      double T = 1.0;
      Rgb c{};
      std::size_t k = begin;
      while (k < end) {
        const Splat2D& s = splats[tiles.entries[k]];
        ++k;
        const double a = splat_alpha(s, x, y);
        for (int ch = 0; ch < 3; ++ch) c[ch] += s.color[ch] * a * T;
        T *= 1.0 - a;
        if (T < opts.termination) break;
      }
      const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
      for (int ch = 0; ch < 3; ++ch) data[3 * pix + ch] = c[ch] + T * bg[ch];
      if (counts) (*counts)[pix] = static_cast<std::uint32_t>(k - begin);
    }
  }
}

}  // namespace

namespace detail {

TileLists build_tiles(const std::vector<Splat2D>& splats, const Camera& cam, const RenderOptions& opts) {
  if (opts.tile <= 0) throw ValidationError("tile size must be positive");
  TileLists tl;
  tl.tiles_x = (cam.width + opts.tile - 1) / opts.tile;
  tl.tiles_y = (cam.height + opts.tile - 1) / opts.tile;
  const std::size_t n_tiles = static_cast<std::size_t>(tl.tiles_x) * tl.tiles_y;
  std::vector<std::size_t> counts(n_tiles, 0);
  auto for_tiles = [&](const Splat2D& s, auto&& fn) {
    if (s.rect[0] >= s.rect[2] || s.rect[1] >= s.rect[3]) return;
    for (int ty = s.rect[1] / opts.tile; ty <= (s.rect[3] - 1) / opts.tile; ++ty)
      for (int tx = s.rect[0] / opts.tile; tx <= (s.rect[2] - 1) / opts.tile; ++tx)
        fn(static_cast<std::size_t>(ty) * tl.tiles_x + tx);
  };
  for (const auto& s : splats) for_tiles(s, [&](std::size_t t) { ++counts[t]; });
  tl.offsets.assign(n_tiles + 1, 0);
  for (std::size_t t = 0; t < n_tiles; ++t) tl.offsets[t + 1] = tl.offsets[t] + counts[t];
  tl.entries.resize(tl.offsets.back());
  std::vector<std::size_t> fill(tl.offsets.begin(), tl.offsets.end() - 1);
  for (std::size_t i = 0; i < splats.size(); ++i)
    for_tiles(splats[i], [&](std::size_t t) { tl.entries[fill[t]++] = static_cast<std::uint32_t>(i); });
  return tl;
}

}  // namespace detail

NdArray rasterize(const std::vector<Splat2D>& splats, const Camera& cam, const Rgb& background,
                  const RenderOptions& opts) {
  cam.validate();
  if (opts.checked) check_sorted(splats);
  const detail::TileLists tiles = detail::build_tiles(splats, cam, opts);
  NdArray image(Shape{static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width), 3});
  parallel_for(tiles.offsets.size() - 1,
               [&](std::size_t t) { composite_tile(splats, tiles, t, cam, background, opts, image, nullptr); });
  return image;
}

NdArray rasterize_reference(const std::vector<Splat2D>& splats, const Camera& cam, const Rgb& background,
                            const RenderOptions&) {
  cam.validate();
  NdArray image(Shape{static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width), 3});
  auto data = image.data();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      double T = 1.0;
      Rgb c{};
      for (const Splat2D& s : splats) {
        const double a = splat_alpha(s, x, y);
        for (int ch = 0; ch < 3; ++ch) c[ch] += s.color[ch] * a * T;
        T *= 1.0 - a;
      }
      const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
      for (int ch = 0; ch < 3; ++ch) data[3 * pix + ch] = c[ch] + T * background[ch];
    }
  }
  return image;
}

NdArray render(const gaussians::GaussianCloud& cloud, const Camera& cam, const Rgb& background,
               const RenderOptions& opts) {
  return rasterize(project_cloud(cloud, cam, opts), cam, background, opts);
}

namespace {

struct RenderState {
  std::vector<Splat2D> splats;
  detail::TileLists tiles;
  std::vector<std::uint32_t> counts;
};

}  // namespace

ad::Var render(ad::Var raw, const ParamLayout& layout, const Camera& cam, const Rgb& background,
               const RenderOptions& opts) {
  cam.validate();
  const NdArray& rv = raw.value();
  if (rv.rank() != 2 || rv.dim(1) != layout.width()) {
    throw ShapeError("render: raw rows " + raw.graph().describe(raw) + " do not match layout width " +
                     std::to_string(layout.width()));
  }
  auto state = std::make_shared<RenderState>();
  for (std::size_t i = 0; i < rv.dim(0); ++i) {
    const gaussians::Gaussian g = gaussians::activate(rv.row(i), layout);
    if (auto s = project(g, i, layout.sh_degree, cam, opts)) state->splats.push_back(*s);
  }
  std::stable_sort(state->splats.begin(), state->splats.end(),
                   [](const Splat2D& a, const Splat2D& b) { return a.depth < b.depth; });
  state->tiles = detail::build_tiles(state->splats, cam, opts);
  state->counts.assign(static_cast<std::size_t>(cam.width) * cam.height, 0);
  NdArray image(Shape{static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width), 3});
  parallel_for(state->tiles.offsets.size() - 1, [&](std::size_t t) {
    composite_tile(state->splats, state->tiles, t, cam, background, opts, image, &state->counts);
  });

  auto backward = [state, layout, cam, background, opts, raw_value = rv](
                      const NdArray& grad_out, const NdArray&, std::span<NdArray* const> grad_in) {
    if (!grad_in[0]) return;
    const auto& splats = state->splats;
    const auto& tiles = state->tiles;
    // One gradient record per tile entry, reduced below in tile order so the
    // result does not depend on the thread count.
    std::vector<detail::SplatGrad> entry_grads(tiles.entries.size());
    const auto go = grad_out.data();
    parallel_for(tiles.offsets.size() - 1, [&](std::size_t t) {
      const TileBounds b = tile_bounds(tiles, t, cam, opts.tile);
      const std::size_t begin = tiles.offsets[t];
      std::vector<double> alpha, trans;
      for (int y = b.y0; y < b.y1; ++y) {
        for (int x = b.x0; x < b.x1; ++x) {
          const std::size_t pix = static_cast<std::size_t>(y) * cam.width + x;
          const std::size_t n = state->counts[pix];
          const Rgb g{go[3 * pix], go[3 * pix + 1], go[3 * pix + 2]};
          alpha.resize(n);
          trans.resize(n + 1);
          trans[0] = 1.0;
          for (std::size_t k = 0; k < n; ++k) {
            alpha[k] = splat_alpha(splats[tiles.entries[begin + k]], x, y);
            trans[k + 1] = trans[k] * (1.0 - alpha[k]);
          }
          // Color seen behind splat k, relative to the transmittance after k.
          Rgb behind = background;
          for (std::size_t kk = n; kk-- > 0;) {
            const Splat2D& s = splats[tiles.entries[begin + kk]];
            detail::SplatGrad& eg = entry_grads[begin + kk];
            const double a = alpha[kk], T = trans[kk];
            double d_alpha = 0.0;
            for (int ch = 0; ch < 3; ++ch) {
              eg.color[ch] += g[ch] * a * T;
              d_alpha += g[ch] * T * (s.color[ch] - behind[ch]);
              behind[ch] = s.color[ch] * a + (1.0 - a) * behind[ch];
            }
            const double dx = x - s.mean[0], dy = y - s.mean[1];
            const double gauss = s.opacity > 0.0 ? a / s.opacity : 0.0;
            eg.opacity += d_alpha * gauss;
            const double da = d_alpha * a;
            eg.mean[0] += da * (s.conic[0] * dx + s.conic[1] * dy);
            eg.mean[1] += da * (s.conic[1] * dx + s.conic[2] * dy);
            eg.conic[0] += -0.5 * da * dx * dx;
            eg.conic[1] += -da * dx * dy;
            eg.conic[2] += -0.5 * da * dy * dy;
          }
        }
      }
    });
    std::vector<detail::SplatGrad> splat_grads(splats.size());
    for (std::size_t e = 0; e < tiles.entries.size(); ++e) {
      detail::SplatGrad& dst = splat_grads[tiles.entries[e]];
      const detail::SplatGrad& src = entry_grads[e];
      for (int i = 0; i < 2; ++i) dst.mean[i] += src.mean[i];
      for (int i = 0; i < 3; ++i) {
        dst.conic[i] += src.conic[i];
        dst.color[i] += src.color[i];
      }
      dst.opacity += src.opacity;
    }
    NdArray& out = *grad_in[0];
    parallel_for(splats.size(), [&](std::size_t i) {
      const std::size_t row = splats[i].index;
      detail::project_backward(raw_value.row(row), layout, cam, opts, splat_grads[i], out.row(row));
    });
  };
  return raw.graph().custom("render", {raw}, std::move(image), std::move(backward));
}

}  // namespace asp::splat
