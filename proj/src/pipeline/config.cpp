// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>

#include "asp/binary_io.hpp"
#include "asp/error.hpp"

namespace asp::pipeline {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(v)) {
    throw ValidationError(where + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& text, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ValidationError(where + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& text, const std::string& where) {
  const long long v = parse_integer(text, where);
  if (v < 0) throw ValidationError(where + ": expected a non-negative integer, got '" + text + "'");
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError(where + ": expected true or false, got '" + text + "'");
}

struct Key {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename Field>
Key real(std::string name, Field field) {
  return {name, [field](const RunConfig& c) { return format_double(field(c)); },
          [field](RunConfig& c, const std::string& v, const std::string& w) { field(c) = parse_double(v, w); }};
}

template <typename T, typename Field>
Key count(std::string name, Field field) {
  return {name, [field](const RunConfig& c) { return std::to_string(field(c)); },
          [field](RunConfig& c, const std::string& v, const std::string& w) {
            field(c) = static_cast<T>(parse_count(v, w));
          }};
}

template <typename Field>
Key flag(std::string name, Field field) {
  return {name, [field](const RunConfig& c) { return std::string(field(c) ? "true" : "false"); },
          [field](RunConfig& c, const std::string& v, const std::string& w) { field(c) = parse_bool(v, w); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.train.seed); },
                 [](RunConfig& c, const std::string& v, const std::string& w) {
                   const auto s = static_cast<std::uint64_t>(parse_count(v, w));
                   c.train.seed = s;
                   c.scene.seed = s;
                 }});
    // scene
    k.push_back(count<int>("image_size", [](auto& c) -> auto& { return c.scene.image_size; }));
    k.push_back(count<std::size_t>("frames", [](auto& c) -> auto& { return c.scene.frames; }));
    k.push_back(count<std::size_t>("cameras", [](auto& c) -> auto& { return c.scene.cameras; }));
    k.push_back(count<std::size_t>("audio_width", [](auto& c) -> auto& { return c.scene.audio_width; }));
    k.push_back(real("ring_degrees", [](auto& c) -> auto& { return c.scene.ring_degrees; }));
    k.push_back(real("heldout_degrees", [](auto& c) -> auto& { return c.scene.heldout_degrees; }));
    k.push_back(real("camera_distance", [](auto& c) -> auto& { return c.scene.camera_distance; }));
    k.push_back(real("test_fraction", [](auto& c) -> auto& { return c.scene.test_fraction; }));
    // model
    k.push_back(count<std::size_t>("gaussians", [](auto& c) -> auto& { return c.train.model.gaussians; }));
    k.push_back(count<int>("sh_degree", [](auto& c) -> auto& { return c.train.model.sh_degree; }));
    k.push_back(count<int>("triplane_levels", [](auto& c) -> auto& { return c.train.model.triplane.levels; }));
    k.push_back(count<int>("triplane_base_resolution",
                           [](auto& c) -> auto& { return c.train.model.triplane.base_resolution; }));
    k.push_back(real("triplane_growth", [](auto& c) -> auto& { return c.train.model.triplane.growth_factor; }));
    k.push_back(count<int>("triplane_log2_table_size",
                           [](auto& c) -> auto& { return c.train.model.triplane.log2_table_size; }));
    k.push_back(count<int>("triplane_features", [](auto& c) -> auto& { return c.train.model.triplane.features; }));
    k.push_back(count<std::size_t>("kan_hidden", [](auto& c) -> auto& { return c.train.model.kan_hidden; }));
    k.push_back(count<int>("kan_grid", [](auto& c) -> auto& { return c.train.model.kan_grid; }));
    k.push_back(count<int>("kan_order", [](auto& c) -> auto& { return c.train.model.kan_order; }));
    k.push_back(real("static_input_scale", [](auto& c) -> auto& { return c.train.model.static_input_scale; }));
    k.push_back(real("agent_ratio", [](auto& c) -> auto& { return c.train.model.agents.ratio; }));
    k.push_back(count<std::size_t>("d_model", [](auto& c) -> auto& { return c.train.model.agents.d_model; }));
    k.push_back(count<long>("ppe_period", [](auto& c) -> auto& { return c.train.model.agents.period; }));
    k.push_back(real("attention_spatial_gain",
                     [](auto& c) -> auto& { return c.train.model.attention_init.spatial; }));
    k.push_back(real("attention_agent_gain", [](auto& c) -> auto& { return c.train.model.attention_init.agent; }));
    k.push_back(real("attention_fusion_gain",
                     [](auto& c) -> auto& { return c.train.model.attention_init.fusion; }));
    // training
    k.push_back(count<std::size_t>("static_iterations",
                                   [](auto& c) -> auto& { return c.train.static_iterations; }));
    k.push_back(count<std::size_t>("deform_iterations",
                                   [](auto& c) -> auto& { return c.train.deform_iterations; }));
    k.push_back(real("static_lr", [](auto& c) -> auto& { return c.train.static_lr; }));
    k.push_back(real("deform_lr", [](auto& c) -> auto& { return c.train.deform_lr; }));
    k.push_back(real("seed_lr_scale", [](auto& c) -> auto& { return c.train.seed_lr_scale; }));
    k.push_back(real("lr_min_fraction", [](auto& c) -> auto& { return c.train.lr_min_fraction; }));
    k.push_back(real("adam_beta1", [](auto& c) -> auto& { return c.train.adam.beta1; }));
    k.push_back(real("adam_beta2", [](auto& c) -> auto& { return c.train.adam.beta2; }));
    k.push_back(real("adam_eps", [](auto& c) -> auto& { return c.train.adam.eps; }));
    k.push_back(real("lambda_dssim", [](auto& c) -> auto& { return c.train.weights.dssim; }));
    k.push_back(real("lambda_lpips", [](auto& c) -> auto& { return c.train.weights.lpips; }));
    k.push_back(real("lambda_lip", [](auto& c) -> auto& { return c.train.weights.lip; }));
    k.push_back(flag("finetune_static", [](auto& c) -> auto& { return c.train.finetune_static; }));
    return k;
  }();
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    const std::string where = source + ":" + std::to_string(no);
    if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (!seen.insert(key).second) throw ValidationError(where + ": duplicate key '" + key + "'");
    out.emplace_back(key, value);
  }
  return out;
}

void apply_config(RunConfig& config, const KeyValues& entries, const std::string& source) {
  for (const auto& [key, value] : entries) {
    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == key; });
    if (it == table.end()) throw ValidationError(source + ": unknown key '" + key + "'");
    it->set(config, value, source + ": " + key);
  }
  config.train.model.audio_width = config.scene.audio_width;
  config.scene.validate();
  config.train.validate();
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw UsageError("config file not found: " + path.string());
  RunConfig c;
  apply_config(c, parse_key_values(io::read_text(path), path.string()), path.string());
  return c;
}

KeyValues resolved_config(const RunConfig& config) {
  KeyValues out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : resolved_config(config)) out += k + " = " + v + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.name);
  return out;
}

}  // namespace asp::pipeline
