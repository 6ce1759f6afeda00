// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <random>
#include <vector>

#include "asp/finite_diff.hpp"
#include "asp/graph.hpp"

namespace asp::testing {

inline NdArray random_array(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  NdArray a(std::move(shape));
  for (double& v : a.data()) v = dist(rng);
  return a;
}

using LossBuilder = std::function<ad::Var(ad::Graph&, const std::vector<ad::Var>&)>;

/// Worst relative error between backward() and central differences over
/// every input array.
inline double gradient_check(const LossBuilder& build, const std::vector<NdArray>& inputs, double step = 1e-5) {
  ad::Graph g;
  std::vector<ad::Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(g.parameter("in" + std::to_string(i), inputs[i]));
  auto grads = g.backward(build(g, vars));
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto fn = [&](const NdArray& x) {
      ad::Graph h;
      std::vector<ad::Var> vs;
      for (std::size_t j = 0; j < inputs.size(); ++j) vs.push_back(h.constant(j == i ? x : inputs[j]));
      return build(h, vs).value().item();
    };
    const NdArray fd = ad::finite_diff(fn, inputs[i], step);
    worst = std::max(worst, ad::relative_error(grads.at("in" + std::to_string(i)), fd));
  }
  return worst;
}

/// Weighted sum with fixed random weights: turns any array into a scalar
/// loss whose gradient exercises every output element.
inline ad::Var random_projection(ad::Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  NdArray w = random_array(rng, x.shape());
  return ad::sum(ad::mul(x, x.graph().constant(w)));
}

}  // namespace asp::testing
