// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Image files.
//
// Float frames ("*.f32"): the ASCII line "ASPIMG1 <width> <height> <channels>\n"
// followed by width*height*channels little-endian IEEE-754 float32 values in
// planar order (all of channel 0 row by row, then channel 1, ...).
//
// PNG: 8-bit RGB for (H, W, 3) images, 8-bit grayscale for (H, W) masks;
// values are clamped to [0, 1] and rounded.

#include <filesystem>

#include "asp/ndarray.hpp"

namespace asp::io {

void write_float_image(const std::filesystem::path& path, const NdArray& image);
/// (H, W, C) for C > 1, (H, W) for single-channel files.
NdArray read_float_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const NdArray& image);
/// Values in [0, 1]; (H, W) for grayscale files, (H, W, 3) otherwise.
NdArray read_png(const std::filesystem::path& path);

}  // namespace asp::io
