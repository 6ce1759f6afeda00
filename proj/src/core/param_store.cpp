// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/param_store.hpp"

#include "asp/error.hpp"

namespace asp {

void ParamStore::set(const std::string& name, NdArray value) { params_[name] = std::move(value); }

NdArray& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("parameter not found: " + name);
  return it->second;
}

const NdArray& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ValidationError("parameter not found: " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = params_.lower_bound(prefix); it != params_.end() && it->first.starts_with(prefix); ++it) {
    out.push_back(it->first);
  }
  return out;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.size();
  return n;
}

double ParamStore::meta(const std::string& key) const { return at("meta/" + key).item(); }

void ParamStore::set_meta(const std::string& key, double value) { set("meta/" + key, NdArray::scalar(value)); }

void ParamStore::round_to_float() {
  for (auto& [_, v] : params_) {
    for (double& x : v.data()) x = static_cast<double>(static_cast<float>(x));
  }
}

}  // namespace asp
