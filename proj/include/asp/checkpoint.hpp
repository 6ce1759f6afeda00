// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Checkpoint container, little-endian throughout:
//
//   bytes 0..7   magic "ASPCKPT1"
//   u32          entry count E
//   E entries    u32 name length, name bytes (UTF-8, no terminator),
//                u32 rank, rank x u64 extents
//   payload      for each entry in header order, prod(extents) f32 values
//                in row-major order
//
// Entries are written in lexicographic name order.

#include <filesystem>

#include "asp/param_store.hpp"

namespace asp {

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path);

}  // namespace asp
