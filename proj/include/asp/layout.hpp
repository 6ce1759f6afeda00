// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace asp {

/// Column layout of a raw Gaussian parameter row, in the order
/// (position, scale, rotation, SH, opacity):
///
///   [0, 3)            position
///   [3, 6)            log-scale
///   [6, 10)           rotation quaternion (w, x, y, z), unnormalized
///   [10, 10 + 3K)     SH coefficients, K = (degree + 1)^2, laid out as
///                     K RGB triples (coefficient-major)
///   10 + 3K           opacity logit
struct ParamLayout {
  int sh_degree = 1;

  static constexpr std::size_t kPosition = 0;
  static constexpr std::size_t kScale = 3;
  static constexpr std::size_t kRotation = 6;
  static constexpr std::size_t kSh = 10;

  std::size_t sh_coeffs() const { return static_cast<std::size_t>((sh_degree + 1) * (sh_degree + 1)); }
  std::size_t sh_width() const { return 3 * sh_coeffs(); }
  std::size_t opacity() const { return kSh + sh_width(); }
  std::size_t width() const { return opacity() + 1; }
};

}  // namespace asp
