// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Flat "key = value" configuration. Lines starting with '#' and blank lines
// are ignored; keys may appear at most once per file. See README.md for the
// documented keys.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "asp/pipeline.hpp"
#include "asp/scene.hpp"

namespace asp::pipeline {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  scene::SceneSpec scene;
  TrainConfig train;
};

/// Throws ValidationError (with `source` and line number) on malformed lines
/// and duplicate keys.
KeyValues parse_key_values(const std::string& text, const std::string& source);

/// Applies every entry; unknown keys and unparsable values throw
/// ValidationError. "seed" sets both the scene and the training seed.
void apply_config(RunConfig& config, const KeyValues& entries, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

/// Every documented key with its current value, in documentation order.
KeyValues resolved_config(const RunConfig& config);
std::string format_config(const RunConfig& config);

/// All documented keys.
std::vector<std::string> config_keys();

}  // namespace asp::pipeline
