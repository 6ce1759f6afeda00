// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "asp/ndarray.hpp"

namespace asp {

/// Named parameter arrays. Iteration order is lexicographic by name, which
/// fixes the optimizer and checkpoint order.
class ParamStore {
 public:
  void set(const std::string& name, NdArray value);
  NdArray& at(const std::string& name);
  const NdArray& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::size_t size() const { return params_.size(); }
  std::size_t total_values() const;

  /// Scalar metadata stored as a one-element array (e.g. "meta/sh_degree").
  double meta(const std::string& key) const;
  void set_meta(const std::string& key, double value);

  /// Rounds every value to the nearest 32-bit float so that a checkpoint
  /// round-trip is exact.
  void round_to_float();

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }

  friend bool operator==(const ParamStore& a, const ParamStore& b) = default;

 private:
  std::map<std::string, NdArray> params_;
};

}  // namespace asp
