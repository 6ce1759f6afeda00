// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Kolmogorov-Arnold network. Every edge (i -> o) of a layer carries
//
//   phi(x) = base[o, i] * silu(x) + sum_t coeffs[o, i, t] * B_t(x)
//
// where B_t are the G + k B-spline bases of order k on a uniform grid over
// [lo, hi], extended by k knots on each side. Unit o sums its incoming edges.
// Inputs outside [lo, hi] are clamped before the spline bases are evaluated.
//
// Parameters: "<prefix>/layer<l>/coeffs" (out, in, G + k) and
// "<prefix>/layer<l>/base" (out, in).

#include <random>
#include <string>
#include <vector>

#include "asp/graph.hpp"
#include "asp/layout.hpp"
#include "asp/param_store.hpp"

namespace asp::kan {

struct SplineGrid {
  double lo = -1.0;
  double hi = 1.0;
  int intervals = 5;  // G
  int order = 3;      // k

  std::size_t basis_count() const { return static_cast<std::size_t>(intervals + order); }
  /// G + 2k + 1 knots, strictly increasing.
  std::vector<double> knots() const;
  void validate() const;
};

/// Cox-de Boor bases at x. Values are non-negative and sum to one for x in
/// [lo, hi]; x outside is clamped.
std::vector<double> spline_basis(double x, const SplineGrid& grid);

/// Bases and their derivatives with respect to x (zero when x was clamped).
void spline_basis(double x, const SplineGrid& grid, const std::vector<double>& knots, double* basis,
                  double* dbasis);

/// (B, in) -> (B, in * (G + k)): per-input spline bases, input-major.
ad::Var bspline_expand(ad::Var x, const SplineGrid& grid);

struct KanConfig {
  std::vector<std::size_t> widths;  // in, hidden..., out
  SplineGrid grid;
  /// Fixed affine standardization applied to the network input.
  double input_scale = 1.0;
  double input_shift = 0.0;

  std::size_t in_width() const { return widths.front(); }
  std::size_t out_width() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }
};

class KanNetwork {
 public:
  KanNetwork(std::string prefix, KanConfig config);

  const KanConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }
  std::string coeffs_name(std::size_t layer) const;
  std::string base_name(std::size_t layer) const;

  /// Random initialization. With `zero_last_layer` the network starts as the
  /// zero function.
  void init(ParamStore& store, std::mt19937_64& rng, bool zero_last_layer = false,
            double spline_noise = 0.1) const;

  ad::Var forward(ad::Graph& g, const ParamStore& store, ad::Var x, bool trainable = true) const;
  NdArray forward(const ParamStore& store, const NdArray& x) const;

 private:
  std::string prefix_;
  KanConfig config_;
};

/// Raw static Gaussian parameters from f_v: KAN output checked against the
/// layout width. Output columns follow ParamLayout.
ad::Var map_static(ad::Graph& g, const KanNetwork& kan, const ParamStore& store, ad::Var features,
                   const ParamLayout& layout, bool trainable = true);
NdArray map_static(const KanNetwork& kan, const ParamStore& store, const NdArray& features,
                   const ParamLayout& layout);

/// Raw deformation offsets from f_d, same column layout as map_static.
ad::Var map_deform(ad::Graph& g, const KanNetwork& kan, const ParamStore& store, ad::Var features,
                   const ParamLayout& layout, bool trainable = true);
NdArray map_deform(const KanNetwork& kan, const ParamStore& store, const NdArray& features,
                   const ParamLayout& layout);

}  // namespace asp::kan
