// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/kan.hpp"

#include <algorithm>
#include <cmath>

#include "asp/error.hpp"

namespace asp::kan {

std::vector<double> SplineGrid::knots() const {
  validate();
  const int n = intervals + 2 * order + 1;
  const double h = (hi - lo) / intervals;
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) t[j] = lo + (j - order) * h;
  return t;
}

void SplineGrid::validate() const {
  if (!(hi > lo) || intervals < 1 || order < 1) throw ValidationError("kan: invalid spline grid");
}

void spline_basis(double x, const SplineGrid& grid, const std::vector<double>& t, double* basis, double* dbasis) {
  const int k = grid.order;
  const int n_int = static_cast<int>(t.size()) - 1;  // order-0 intervals
  const bool inside = x >= grid.lo && x <= grid.hi;
  const double xc = std::clamp(x, grid.lo, grid.hi);

  // Triangular Cox-de Boor table; b[j] holds B_{j,p} for the current order p.
  double b[64];
  double prev[64];
  for (int j = 0; j < n_int; ++j) b[j] = (t[j] <= xc && xc < t[j + 1]) ? 1.0 : 0.0;
  for (int p = 1; p <= k; ++p) {
    std::copy(b, b + n_int - p + 1, prev);
    for (int j = 0; j < n_int - p; ++j) {
      const double left = (xc - t[j]) / (t[j + p] - t[j]) * prev[j];
      const double right = (t[j + p + 1] - xc) / (t[j + p + 1] - t[j + 1]) * prev[j + 1];
      b[j] = left + right;
    }
  }
  const int count = n_int - k;
  std::copy(b, b + count, basis);
  if (dbasis) {
    // prev holds the order k-1 bases.
    for (int j = 0; j < count; ++j) {
      dbasis[j] = inside ? k * (prev[j] / (t[j + k] - t[j]) - prev[j + 1] / (t[j + k + 1] - t[j + 1])) : 0.0;
    }
  }
}

std::vector<double> spline_basis(double x, const SplineGrid& grid) {
  const auto t = grid.knots();
  if (t.size() > 64) throw ValidationError("kan: spline grid too large");
  std::vector<double> out(grid.basis_count());
  spline_basis(x, grid, t, out.data(), nullptr);
  return out;
}

ad::Var bspline_expand(ad::Var x, const SplineGrid& grid) {
  const NdArray& xv = x.value();
  if (xv.rank() != 2) throw ShapeError("bspline_expand: expected rank 2 at " + x.graph().describe(x));
  const auto t = grid.knots();
  if (t.size() > 64) throw ValidationError("kan: spline grid too large");
  const std::size_t B = xv.dim(0), in = xv.dim(1), nb = grid.basis_count();
  NdArray out(Shape{B, in * nb});
  NdArray deriv(Shape{B, in * nb});
  for (std::size_t r = 0; r < B; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      spline_basis(xv(r, i), grid, t, &out(r, i * nb), &deriv(r, i * nb));
    }
  }
  return x.graph().custom("bspline_expand", {x}, std::move(out),
                          [deriv = std::move(deriv), B, in, nb](const NdArray& go, const NdArray&,
                                                               std::span<NdArray* const> gi) {
                            NdArray& gx = *gi[0];
                            for (std::size_t r = 0; r < B; ++r)
                              for (std::size_t i = 0; i < in; ++i) {
                                double s = 0.0;
                                for (std::size_t q = 0; q < nb; ++q) s += go(r, i * nb + q) * deriv(r, i * nb + q);
                                gx(r, i) += s;
                              }
                          });
}

KanNetwork::KanNetwork(std::string prefix, KanConfig config) : prefix_(std::move(prefix)), config_(std::move(config)) {
  if (config_.widths.size() < 2) throw ValidationError("kan: need at least one layer");
  for (std::size_t w : config_.widths)
    if (w == 0) throw ValidationError("kan: zero layer width");
  config_.grid.validate();
}

std::string KanNetwork::coeffs_name(std::size_t layer) const {
  return prefix_ + "/layer" + std::to_string(layer) + "/coeffs";
}

std::string KanNetwork::base_name(std::size_t layer) const {
  return prefix_ + "/layer" + std::to_string(layer) + "/base";
}

void KanNetwork::init(ParamStore& store, std::mt19937_64& rng, bool zero_last_layer, double spline_noise) const {
  const std::size_t nb = config_.grid.basis_count();
  for (std::size_t l = 0; l < config_.layers(); ++l) {
    const std::size_t in = config_.widths[l], out = config_.widths[l + 1];
    const bool zero = zero_last_layer && l + 1 == config_.layers();
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> base_dist(-bound, bound);
    std::normal_distribution<double> coeff_dist(0.0, spline_noise * bound);
    NdArray base(Shape{out, in}, 0.0);
    NdArray coeffs(Shape{out, in, nb}, 0.0);
    if (!zero) {
      for (double& v : base.data()) v = base_dist(rng);
      for (double& v : coeffs.data()) v = coeff_dist(rng);
    }
    store.set(base_name(l), std::move(base));
    store.set(coeffs_name(l), std::move(coeffs));
  }
}

ad::Var KanNetwork::forward(ad::Graph& g, const ParamStore& store, ad::Var x, bool trainable) const {
  const NdArray& xv = x.value();
  if (xv.rank() != 2 || xv.dim(1) != config_.in_width()) {
    throw ShapeError("kan '" + prefix_ + "': expected input width " + std::to_string(config_.in_width()) + " at " +
                     g.describe(x));
  }
  ad::Var h = x;
  if (config_.input_scale != 1.0) h = ad::scale(h, config_.input_scale);
  if (config_.input_shift != 0.0) h = ad::add_scalar(h, config_.input_shift);
  const std::size_t nb = config_.grid.basis_count();
  for (std::size_t l = 0; l < config_.layers(); ++l) {
    const std::size_t in = config_.widths[l], out = config_.widths[l + 1];
    ad::Var base = g.parameter(store, base_name(l), trainable);
    ad::Var coeffs = g.parameter(store, coeffs_name(l), trainable);
    if (base.shape() != Shape{out, in} || coeffs.shape() != Shape{out, in, nb}) {
      throw ShapeError("kan '" + prefix_ + "': parameter shapes do not match layer " + std::to_string(l));
    }
    ad::Var base_part = ad::matmul(ad::silu(h), base, ad::Transpose::No, ad::Transpose::Yes);
    ad::Var spline_part = ad::matmul(bspline_expand(h, config_.grid), ad::reshape(coeffs, {out, in * nb}),
                                     ad::Transpose::No, ad::Transpose::Yes);
    h = ad::add(base_part, spline_part);
  }
  return h;
}

NdArray KanNetwork::forward(const ParamStore& store, const NdArray& x) const {
  ad::Graph g;
  return forward(g, store, g.constant(x), false).value();
}

namespace {

void check_layout(const KanNetwork& kan, const ParamLayout& layout) {
  if (kan.config().out_width() != layout.width()) {
    throw ShapeError("kan '" + kan.prefix() + "': output width " + std::to_string(kan.config().out_width()) +
                     " does not match parameter layout width " + std::to_string(layout.width()));
  }
}

}  // namespace

ad::Var map_static(ad::Graph& g, const KanNetwork& kan, const ParamStore& store, ad::Var features,
                   const ParamLayout& layout, bool trainable) {
  check_layout(kan, layout);
  return kan.forward(g, store, features, trainable);
}

NdArray map_static(const KanNetwork& kan, const ParamStore& store, const NdArray& features,
                   const ParamLayout& layout) {
  check_layout(kan, layout);
  return kan.forward(store, features);
}

ad::Var map_deform(ad::Graph& g, const KanNetwork& kan, const ParamStore& store, ad::Var features,
                   const ParamLayout& layout, bool trainable) {
  return map_static(g, kan, store, features, layout, trainable);
}

NdArray map_deform(const KanNetwork& kan, const ParamStore& store, const NdArray& features,
                   const ParamLayout& layout) {
  return map_static(kan, store, features, layout);
}

}  // namespace asp::kan
