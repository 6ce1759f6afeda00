// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/gaussians.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

#include "asp/binary_io.hpp"
#include "asp/error.hpp"

namespace asp::gaussians {

using io::ByteReader;
using io::ByteWriter;
namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_width(const NdArray& raw, const ParamLayout& layout, const char* what) {
  if (raw.rank() != 2 || raw.dim(1) != layout.width()) {
    throw ShapeError(std::string(what) + ": expected (N, " + std::to_string(layout.width()) + "), got " +
                     shape_string(raw.shape()));
  }
}

std::vector<std::string> ply_properties(const ParamLayout& layout) {
  std::vector<std::string> names{"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
  for (std::size_t i = 0; i < 3 * (layout.sh_coeffs() - 1); ++i) names.push_back("f_rest_" + std::to_string(i));
  names.push_back("opacity");
  for (int i = 0; i < 3; ++i) names.push_back("scale_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) names.push_back("rot_" + std::to_string(i));
  return names;
}

// PLY property order -> raw column (or -1 for the zero normals).
std::vector<int> ply_columns(const ParamLayout& layout) {
  const int K = static_cast<int>(layout.sh_coeffs());
  std::vector<int> cols{0, 1, 2, -1, -1, -1};
  for (int c = 0; c < 3; ++c) cols.push_back(static_cast<int>(ParamLayout::kSh) + c);
  for (int c = 0; c < 3; ++c)
    for (int k = 1; k < K; ++k) cols.push_back(static_cast<int>(ParamLayout::kSh) + 3 * k + c);
  cols.push_back(static_cast<int>(layout.opacity()));
  for (int i = 0; i < 3; ++i) cols.push_back(static_cast<int>(ParamLayout::kScale) + i);
  for (int i = 0; i < 4; ++i) cols.push_back(static_cast<int>(ParamLayout::kRotation) + i);
  return cols;
}

std::string ply_header(const ParamLayout& layout, std::size_t count) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << count << "\n";
  for (const auto& name : ply_properties(layout)) h << "property float " << name << "\n";
  h << "end_header\n";
  return h.str();
}

}  // namespace

void GaussianCloud::validate() const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const Gaussian& g = items[i];
    const std::string at = "gaussian " + std::to_string(i) + ": ";
    double norm = 0.0;
    for (double q : g.rotation) norm += q * q;
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-9) throw ValidationError(at + "rotation is not unit length");
    for (double s : g.scale)
      if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError(at + "non-positive scale");
    if (!(g.opacity >= 0.0 && g.opacity <= 1.0)) throw ValidationError(at + "opacity outside [0, 1]");
    for (double v : g.position)
      if (!std::isfinite(v)) throw ValidationError(at + "non-finite position");
    if (g.sh.size() != layout.sh_width()) throw ValidationError(at + "SH width mismatch");
    for (double v : g.sh)
      if (!std::isfinite(v)) throw ValidationError(at + "non-finite SH coefficient");
  }
}

Gaussian activate(std::span<const double> raw, const ParamLayout& layout) {
  if (raw.size() != layout.width()) {
    throw ShapeError("activate: raw width " + std::to_string(raw.size()) + ", layout expects " +
                     std::to_string(layout.width()));
  }
  for (double v : raw) {
    if (!std::isfinite(v)) throw NumericError("activate: non-finite raw parameter");
  }
  Gaussian g;
  for (int i = 0; i < 3; ++i) {
    g.position[i] = raw[ParamLayout::kPosition + i];
    g.scale[i] = std::exp(raw[ParamLayout::kScale + i]);
  }
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) norm += raw[ParamLayout::kRotation + i] * raw[ParamLayout::kRotation + i];
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw ValidationError("activate: zero-norm rotation quaternion");
  for (int i = 0; i < 4; ++i) g.rotation[i] = raw[ParamLayout::kRotation + i] / norm;
  g.sh.assign(raw.begin() + ParamLayout::kSh, raw.begin() + ParamLayout::kSh + layout.sh_width());
  g.opacity = sigmoid(raw[layout.opacity()]);
  return g;
}

GaussianCloud activate(const NdArray& raw, const ParamLayout& layout) {
  check_width(raw, layout, "activate");
  GaussianCloud cloud{layout, {}};
  cloud.items.reserve(raw.dim(0));
  for (std::size_t i = 0; i < raw.dim(0); ++i) cloud.items.push_back(activate(raw.row(i), layout));
  return cloud;
}

NdArray compose_raw(const NdArray& raw, const NdArray& deltas) {
  if (raw.rank() != 2 || deltas.rank() != 2) throw ShapeError("compose: raw rows and deltas must be rank 2");
  if (raw.dim(0) != deltas.dim(0)) {
    throw ValidationError("compose: cloud has " + std::to_string(raw.dim(0)) + " Gaussians, deltas have " +
                          std::to_string(deltas.dim(0)));
  }
  if (raw.dim(1) != deltas.dim(1)) throw ShapeError("compose: delta width differs from raw width");
  NdArray out = raw;
  auto o = out.data();
  auto d = deltas.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += d[i];
  return out;
}

GaussianCloud compose(const NdArray& raw, const NdArray& deltas, const ParamLayout& layout) {
  return activate(compose_raw(raw, deltas), layout);
}

NdArray StaticHead::gains(const ParamLayout& layout) const {
  NdArray g(Shape{layout.width()}, 0.0);
  for (int i = 0; i < 3; ++i) {
    g[ParamLayout::kPosition + i] = position_gain;
    g[ParamLayout::kScale + i] = scale_gain;
  }
  for (int i = 0; i < 4; ++i) g[ParamLayout::kRotation + i] = rotation_gain;
  for (std::size_t i = 0; i < layout.sh_width(); ++i) g[ParamLayout::kSh + i] = sh_gain;
  g[layout.opacity()] = opacity_gain;
  return g;
}

NdArray StaticHead::biases(const ParamLayout& layout) const {
  NdArray b(Shape{layout.width()}, 0.0);
  for (int i = 0; i < 3; ++i) b[ParamLayout::kScale + i] = scale_bias;
  b[ParamLayout::kRotation] = 1.0;
  b[layout.opacity()] = opacity_bias;
  return b;
}

StaticModel::StaticModel(triplane::TriplaneConfig encoder, kan::KanConfig kan, ParamLayout layout, StaticHead head)
    : encoder_(std::move(encoder)), kan_("kan_static", std::move(kan)), layout_(layout), head_(head) {
  if (kan_.config().in_width() != encoder_.config().output_width()) {
    throw ShapeError("static model: KAN input width " + std::to_string(kan_.config().in_width()) +
                     " differs from encoder width " + std::to_string(encoder_.config().output_width()));
  }
  if (kan_.config().out_width() != layout_.width()) {
    throw ShapeError("static model: KAN output width " + std::to_string(kan_.config().out_width()) +
                     " differs from layout width " + std::to_string(layout_.width()));
  }
}

void StaticModel::init(ParamStore& store, std::mt19937_64& rng) const {
  triplane::init_tables(store, encoder_.config(), rng);
  kan_.init(store, rng);
}

NdArray StaticModel::features(const ParamStore& store, const NdArray& seeds) const {
  return encoder_.encode_batch(store, seeds);
}

NdArray StaticModel::raw(const ParamStore& store, const NdArray& seeds) const {
  if (seeds.rank() != 2 || seeds.dim(1) != 3) throw ShapeError("init_static: seeds must be (N, 3)");
  if (seeds.dim(0) == 0) throw ValidationError("init_static: no seed points");
  NdArray out = kan::map_static(kan_, store, features(store, seeds), layout_);
  const NdArray gain = head_.gains(layout_);
  const NdArray bias = head_.biases(layout_);
  const std::size_t W = layout_.width();
  for (std::size_t i = 0; i < out.dim(0); ++i) {
    for (std::size_t c = 0; c < W; ++c) out(i, c) = out(i, c) * gain[c] + bias[c];
    for (int c = 0; c < 3; ++c) out(i, ParamLayout::kPosition + c) += seeds(i, c);
  }
  return out;
}

ad::Var StaticModel::raw(ad::Graph& g, const ParamStore& store, const NdArray& seeds, bool trainable) const {
  return raw(g, store, g.constant(seeds, "seeds"), trainable);
}

ad::Var StaticModel::raw(ad::Graph& g, const ParamStore& store, ad::Var seeds, bool trainable) const {
  if (seeds.shape().size() != 2 || seeds.shape()[1] != 3) throw ShapeError("init_static: seeds must be (N, 3)");
  const std::size_t n = seeds.shape()[0];
  if (n == 0) throw ValidationError("init_static: no seed points");
  ad::Var f = encoder_.encode(g, store, seeds, trainable);
  ad::Var k = kan::map_static(g, kan_, store, f, layout_, trainable);
  ad::Var offset = ad::concat({seeds, g.constant(NdArray(Shape{n, layout_.width() - 3}, 0.0))}, 1);
  ad::Var scaled = ad::mul(k, g.constant(head_.gains(layout_), "head_gain"));
  return ad::add(ad::add(scaled, g.constant(head_.biases(layout_), "head_bias")), offset);
}

GaussianCloud StaticModel::init_static(const ParamStore& store, const NdArray& seeds) const {
  return activate(raw(store, seeds), layout_);
}

NdArray stratified_seeds(std::mt19937_64& rng, std::size_t count, const std::array<double, 3>& lo,
                         const std::array<double, 3>& hi) {
  if (count == 0) throw ValidationError("stratified_seeds: count must be positive");
  std::size_t side = 1;
  while (side * side * side < count) ++side;
  std::vector<std::size_t> cells(side * side * side);
  std::iota(cells.begin(), cells.end(), 0);
  // Partial Fisher-Yates keeps the draw independent of std::shuffle internals.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, cells.size() - 1);
    std::swap(cells[i], cells[pick(rng)]);
  }
  std::sort(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(count));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NdArray out(Shape{count, 3});
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t idx[3] = {cells[i] % side, (cells[i] / side) % side, cells[i] / (side * side)};
    for (int c = 0; c < 3; ++c) {
      const double cell = (hi[c] - lo[c]) / static_cast<double>(side);
      out(i, c) = lo[c] + cell * (static_cast<double>(idx[c]) + u(rng));
    }
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const NdArray& raw, const ParamLayout& layout) {
  check_width(raw, layout, "write_ply");
  const std::string header = ply_header(layout, raw.dim(0));
  ByteWriter w;
  w.bytes(header.data(), header.size());
  const auto cols = ply_columns(layout);
  for (std::size_t i = 0; i < raw.dim(0); ++i)
    for (int c : cols) w.f32(c < 0 ? 0.0f : static_cast<float>(raw(i, static_cast<std::size_t>(c))));
  io::write_file_atomic(path, w.buffer());
}

NdArray read_ply(const std::filesystem::path& path, const ParamLayout& layout) {
  std::vector<char> data = io::read_file(path);
  const std::string text(data.begin(), data.end());
  const std::string end = "end_header\n";
  const auto pos = text.find(end);
  if (pos == std::string::npos) throw ValidationError(path.string() + ": missing PLY header");
  std::istringstream header(text.substr(0, pos));
  std::string line;
  std::size_t count = 0;
  bool found = false;
  while (std::getline(header, line)) {
    if (line.rfind("element vertex ", 0) == 0) {
      count = std::stoull(line.substr(15));
      found = true;
    }
  }
  if (!found || text.substr(0, pos + end.size()) != ply_header(layout, count)) {
    throw ValidationError(path.string() + ": PLY properties do not match SH degree " +
                          std::to_string(layout.sh_degree));
  }
  ByteReader r(std::vector<char>(data.begin() + static_cast<std::ptrdiff_t>(pos + end.size()), data.end()),
               path.string());
  const auto cols = ply_columns(layout);
  NdArray raw(Shape{count, layout.width()});
  for (std::size_t i = 0; i < count; ++i)
    for (int c : cols) {
      const float v = r.f32();
      if (c >= 0) raw(i, static_cast<std::size_t>(c)) = v;
    }
  if (!r.at_end()) throw ValidationError(path.string() + ": trailing bytes after PLY payload");
  return raw;
}

}  // namespace asp::gaussians
