// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/triplane.hpp"

#include <algorithm>
#include <cmath>

#include "asp/error.hpp"

namespace asp::triplane {

int TriplaneConfig::resolution(int level) const {
  return static_cast<int>(std::floor(base_resolution * std::pow(growth_factor, level)));
}

void TriplaneConfig::validate() const {
  if (levels < 1 || base_resolution < 1 || growth_factor < 1.0 || log2_table_size < 1 || log2_table_size > 30 ||
      features < 1) {
    throw ValidationError("triplane: invalid configuration");
  }
}

std::uint32_t hash_index(std::uint32_t i, std::uint32_t j, std::size_t table_size) {
  const std::uint64_t h = (std::uint64_t{i} * kHashPrime1) ^ (std::uint64_t{j} * kHashPrime2);
  return static_cast<std::uint32_t>(h & (table_size - 1));
}

std::string plane_name(Plane plane) {
  switch (plane) {
    case Plane::XY: return "xy";
    case Plane::YZ: return "yz";
    case Plane::XZ: return "xz";
  }
  return "?";
}

std::string table_name(Plane plane, int level) {
  return "triplane/" + plane_name(plane) + "/level" + std::to_string(level);
}

std::array<double, 2> project(Plane plane, const SpatialPoint& p) {
  switch (plane) {
    case Plane::XY: return {p.x, p.y};
    case Plane::YZ: return {p.y, p.z};
    case Plane::XZ: return {p.x, p.z};
  }
  return {0.0, 0.0};
}

namespace {

// Nested lerps rather than a weighted sum, so equal corners reproduce their
// value exactly.
inline double bilerp(const CellLookup& c, const NdArray& table, std::size_t f) {
  const double f00 = table(c.rows[0], f), f10 = table(c.rows[1], f);
  const double f01 = table(c.rows[2], f), f11 = table(c.rows[3], f);
  const double lo = f00 + c.fu * (f10 - f00);
  const double hi = f01 + c.fu * (f11 - f01);
  return lo + c.fv * (hi - lo);
}

}  // namespace

CellLookup lookup_cell(double u, double v, int resolution, std::size_t table_size) {
  const double res = static_cast<double>(resolution);
  const bool u_in = u > -1.0 && u < 1.0;
  const bool v_in = v > -1.0 && v < 1.0;
  const double gu = (std::clamp(u, -1.0, 1.0) + 1.0) * 0.5 * res;
  const double gv = (std::clamp(v, -1.0, 1.0) + 1.0) * 0.5 * res;
  const int iu = std::min(static_cast<int>(std::floor(gu)), resolution - 1);
  const int iv = std::min(static_cast<int>(std::floor(gv)), resolution - 1);
  const double fu = gu - iu;
  const double fv = gv - iv;
  const double su = u_in ? 0.5 * res : 0.0;  // d gu / du
  const double sv = v_in ? 0.5 * res : 0.0;

  CellLookup c;
  const auto ui = static_cast<std::uint32_t>(iu);
  const auto vi = static_cast<std::uint32_t>(iv);
  c.rows = {hash_index(ui, vi, table_size), hash_index(ui + 1, vi, table_size), hash_index(ui, vi + 1, table_size),
            hash_index(ui + 1, vi + 1, table_size)};
  c.fu = fu;
  c.fv = fv;
  c.weights = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
  c.dw_du = {-(1 - fv) * su, (1 - fv) * su, -fv * su, fv * su};
  c.dw_dv = {-(1 - fu) * sv, -fu * sv, (1 - fu) * sv, fu * sv};
  return c;
}

void init_tables(ParamStore& store, const TriplaneConfig& config, std::mt19937_64& rng, double lo, double hi) {
  config.validate();
  std::uniform_real_distribution<double> dist(lo, hi);
  for (Plane plane : kPlanes) {
    for (int l = 0; l < config.levels; ++l) {
      NdArray t(Shape{config.table_size(), static_cast<std::size_t>(config.features)});
      for (double& v : t.data()) v = dist(rng);
      store.set(table_name(plane, l), std::move(t));
    }
  }
}

TriplaneEncoder::TriplaneEncoder(TriplaneConfig config) : config_(config) { config_.validate(); }

std::vector<double> TriplaneEncoder::encode_plane(const ParamStore& store, Plane plane, double u, double v) const {
  const std::size_t F = static_cast<std::size_t>(config_.features);
  std::vector<double> out(config_.output_width(), 0.0);
  for (int l = 0; l < config_.levels; ++l) {
    const NdArray& table = store.at(table_name(plane, l));
    const CellLookup c = lookup_cell(u, v, config_.resolution(l), config_.table_size());
    for (std::size_t f = 0; f < F; ++f) out[l * F + f] = bilerp(c, table, f);
  }
  return out;
}

std::vector<double> TriplaneEncoder::encode_point(const ParamStore& store, const SpatialPoint& p) const {
  std::vector<double> out(config_.output_width(), 1.0);
  for (Plane plane : kPlanes) {
    const auto uv = project(plane, p);
    const auto f = encode_plane(store, plane, uv[0], uv[1]);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= f[i];
  }
  return out;
}

NdArray TriplaneEncoder::encode_batch(const ParamStore& store, const NdArray& points) const {
  if (points.rank() != 2 || points.dim(1) != 3) {
    throw ShapeError("encode_batch: expected (N, 3) points, got " + shape_string(points.shape()));
  }
  if (points.dim(0) == 0) throw ValidationError("encode_batch: empty batch");
  ad::Graph g;
  return encode(g, store, g.constant(points, "points"), false).value();
}

ad::Var TriplaneEncoder::encode_plane(ad::Graph& g, const ParamStore& store, Plane plane, ad::Var points,
                                      bool trainable) const {
  const NdArray& pts = points.value();
  if (pts.rank() != 2 || pts.dim(1) != 3) {
    throw ShapeError("triplane: expected (N, 3) points at " + g.describe(points));
  }
  const std::size_t N = pts.dim(0);
  const std::size_t F = static_cast<std::size_t>(config_.features);
  const std::size_t W = config_.output_width();
  const std::size_t L = static_cast<std::size_t>(config_.levels);
  const std::size_t T = config_.table_size();

  std::vector<ad::Var> inputs{points};
  std::vector<const NdArray*> tables;
  for (int l = 0; l < config_.levels; ++l) {
    ad::Var t = g.parameter(store, table_name(plane, l), trainable);
    if (t.value().rank() != 2 || t.value().dim(0) != T || t.value().dim(1) != F) {
      throw ShapeError("triplane: table " + g.describe(t) + " does not match configuration");
    }
    inputs.push_back(t);
    tables.push_back(&t.value());
  }
  const int axis_u = plane == Plane::YZ ? 1 : 0;
  const int axis_v = plane == Plane::XY ? 1 : 2;

  std::vector<CellLookup> cells(N * L);
  NdArray out(Shape{N, W}, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t l = 0; l < L; ++l) {
      const CellLookup& c = cells[n * L + l] =
          lookup_cell(pts(n, axis_u), pts(n, axis_v), config_.resolution(static_cast<int>(l)), T);
      for (std::size_t f = 0; f < F; ++f) out(n, l * F + f) = bilerp(c, *tables[l], f);
    }
  }

  return g.custom(
      "triplane_" + plane_name(plane), inputs, std::move(out),
      [cells = std::move(cells), tables, N, L, F, axis_u, axis_v](const NdArray& go, const NdArray&,
                                                                    std::span<NdArray* const> gi) {
        NdArray* gpts = gi[0];
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t l = 0; l < L; ++l) {
            const CellLookup& c = cells[n * L + l];
            NdArray* gt = gi[1 + l];
            for (int k = 0; k < 4; ++k) {
              for (std::size_t f = 0; f < F; ++f) {
                const double gof = go(n, l * F + f);
                if (gt) (*gt)(c.rows[k], f) += c.weights[k] * gof;
                if (gpts) {
                  const double feat = (*tables[l])(c.rows[k], f);
                  (*gpts)(n, axis_u) += c.dw_du[k] * feat * gof;
                  (*gpts)(n, axis_v) += c.dw_dv[k] * feat * gof;
                }
              }
            }
          }
        }
      });
}

ad::Var TriplaneEncoder::encode(ad::Graph& g, const ParamStore& store, ad::Var points, bool trainable) const {
  ad::Var xy = encode_plane(g, store, Plane::XY, points, trainable);
  ad::Var yz = encode_plane(g, store, Plane::YZ, points, trainable);
  ad::Var xz = encode_plane(g, store, Plane::XZ, points, trainable);
  return ad::hadamard(ad::hadamard(xy, yz), xz);
}

}  // namespace asp::triplane
