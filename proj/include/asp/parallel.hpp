// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace asp {

/// Worker count used by parallel_for. Defaults to the hardware concurrency.
std::size_t num_threads();
void set_num_threads(std::size_t n);

/// Calls fn(i) for i in [0, n). Work is split into contiguous static chunks,
/// one per worker, so results that are written to disjoint slots are
/// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace asp
