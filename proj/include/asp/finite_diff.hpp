// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "asp/ndarray.hpp"

namespace asp::ad {

using ScalarFn = std::function<double(const NdArray&)>;

/// Central differences (fn(x + h e_i) - fn(x - h e_i)) / 2h for every
/// coordinate of `point`. Throws NumericError if fn returns a non-finite value.
NdArray finite_diff(const ScalarFn& fn, const NdArray& point, double step = 1e-5);

/// ||a - b|| / max(||a||, ||b||), or 0 when both norms are below `floor`.
double relative_error(const NdArray& a, const NdArray& b, double floor = 1e-12);

}  // namespace asp::ad
