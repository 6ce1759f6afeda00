// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "asp/binary_io.hpp"
#include "asp/error.hpp"

namespace asp {
namespace {
constexpr char kMagic[8] = {'A', 'S', 'P', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  io::ByteWriter w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, value] : params) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(value.rank()));
    for (std::size_t d : value.shape()) w.u64(d);
  }
  for (const auto& [_, value] : params) {
    for (double v : value.data()) w.f32(static_cast<float>(v));
  }
  io::write_file_atomic(path, w.buffer());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("checkpoint: bad magic in " + path.string());
  }
  const std::uint32_t count = r.u32();
  std::vector<std::pair<std::string, Shape>> header;
  header.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.u32(), '\0');
    r.bytes(name.data(), name.size());
    Shape shape(r.u32());
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    header.emplace_back(std::move(name), std::move(shape));
  }
  ParamStore out;
  for (auto& [name, shape] : header) {
    NdArray a(shape);
    for (double& v : a.data()) v = r.f32();
    out.set(name, std::move(a));
  }
  if (!r.at_end()) throw ValidationError("checkpoint: trailing bytes in " + path.string());
  return out;
}

}  // namespace asp
