// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "asp/error.hpp"

namespace asp::ad {

NdArray finite_diff(const ScalarFn& fn, const NdArray& point, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ValidationError("finite_diff: step must be positive");
  if (!point.all_finite()) throw ValidationError("finite_diff: point has non-finite values");
  NdArray x = point;
  NdArray grad(point.shape(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = fn(x);
    x[i] = orig - step;
    const double fm = fn(x);
    x[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff: function returned a non-finite value at coordinate " + std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

double relative_error(const NdArray& a, const NdArray& b, double floor) {
  if (a.size() != b.size()) {
    throw ShapeError("relative_error: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  if (denom < floor) return 0.0;
  return std::sqrt(diff) / denom;
}

}  // namespace asp::ad
