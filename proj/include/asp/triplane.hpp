// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Multi-resolution hashed triplane. A point (x, y, z) is projected onto the
// XY, YZ and XZ planes; on each plane every level bilinearly interpolates four
// hashed corner rows of width F and the levels are concatenated (width L*F).
// The three plane features are fused with a Hadamard product, level-aligned.
//
// Tables live in a ParamStore under "triplane/<plane>/level<l>", shape (T, F).

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "asp/graph.hpp"
#include "asp/param_store.hpp"

namespace asp::triplane {

struct TriplaneConfig {
  int levels = 4;
  int base_resolution = 16;
  double growth_factor = 2.0;
  int log2_table_size = 14;
  int features = 2;

  std::size_t table_size() const { return std::size_t{1} << log2_table_size; }
  std::size_t output_width() const { return static_cast<std::size_t>(levels * features); }
  /// Cells per axis at `level`.
  int resolution(int level) const;
  void validate() const;
};

enum class Plane { XY = 0, YZ = 1, XZ = 2 };
inline constexpr std::array<Plane, 3> kPlanes = {Plane::XY, Plane::YZ, Plane::XZ};

struct SpatialPoint {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline constexpr std::uint64_t kHashPrime1 = 1;
inline constexpr std::uint64_t kHashPrime2 = 2654435761ULL;

/// (i * 1 XOR j * 2654435761) mod table_size; table_size must be a power of two.
std::uint32_t hash_index(std::uint32_t i, std::uint32_t j, std::size_t table_size);

std::string plane_name(Plane plane);
std::string table_name(Plane plane, int level);

/// Projection of a point onto a plane's (u, v) coordinates.
std::array<double, 2> project(Plane plane, const SpatialPoint& p);

/// The four hashed corners of the cell containing (u, v) at one level, with
/// their bilinear weights. Coordinates are clamped to [-1, 1] first.
struct CellLookup {
  std::array<std::uint32_t, 4> rows;
  std::array<double, 4> weights;
  double fu = 0.0, fv = 0.0;  // position inside the cell
  // d weight / du and d weight / dv; zero along clamped axes.
  std::array<double, 4> dw_du;
  std::array<double, 4> dw_dv;
};
CellLookup lookup_cell(double u, double v, int resolution, std::size_t table_size);

/// Fills every table with values uniform in [lo, hi].
void init_tables(ParamStore& store, const TriplaneConfig& config, std::mt19937_64& rng, double lo = -1.0,
                 double hi = 1.0);

class TriplaneEncoder {
 public:
  explicit TriplaneEncoder(TriplaneConfig config);

  const TriplaneConfig& config() const { return config_; }

  /// Per-plane feature (width L*F) for 2D coordinates on that plane.
  std::vector<double> encode_plane(const ParamStore& store, Plane plane, double u, double v) const;
  /// f_v(p): Hadamard product of the three plane features.
  std::vector<double> encode_point(const ParamStore& store, const SpatialPoint& p) const;
  /// Rows of an (N, 3) point matrix; throws on an empty batch.
  NdArray encode_batch(const ParamStore& store, const NdArray& points) const;

  /// Differentiable plane lookup for an (N, 3) point variable.
  ad::Var encode_plane(ad::Graph& g, const ParamStore& store, Plane plane, ad::Var points,
                       bool trainable = true) const;
  /// Differentiable f_v for an (N, 3) point variable, width L*F.
  ad::Var encode(ad::Graph& g, const ParamStore& store, ad::Var points, bool trainable = true) const;

 private:
  TriplaneConfig config_;
};

}  // namespace asp::triplane
