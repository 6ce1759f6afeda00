// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Scene directory layout:
//
//   scene.txt         key = value: spec fields, background, seed box, rest landmarks
//   cameras.txt       one line per camera:
//                       <name> <width> <height> <fx> <fy> <cx> <cy> <3x4 [R|t] row-major>
//                     names are cam0..camK-1 (training ring) and heldout
//   track.f32         header line "ASPTRACK1 frames=<T> audio=<A> blink=1 pose=6 timestep=1"
//                     then T rows of little-endian float32 in that column order
//   keypoints.txt     one line per frame: <t> <aperture> <x0> <y0> ... (pixels)
//   frames/<t>.f32    ground-truth frames (float image format, t zero-padded to 6)
//   masks/<t>.png     lip masks, 8-bit grayscale
//   neutral/cam<k>.f32, neutral/heldout.f32   rest-pose views
//
// Numbers in text files are printed with %.17g (cameras) or %.9g (float data).

#include <filesystem>
#include <string>
#include <vector>

#include "asp/scene.hpp"

namespace asp::scene {

/// Writes into a sibling temporary directory, then renames it into place.
/// An existing directory is replaced only with `force`; otherwise
/// ValidationError.
void save_scene(const SyntheticScene& scene, const std::filesystem::path& dir, bool force = false);
SyntheticScene load_scene(const std::filesystem::path& dir);

/// Problems with a scene directory (missing files, count or shape
/// mismatches). Empty when the directory matches the layout.
std::vector<std::string> check_scene_layout(const std::filesystem::path& dir);

void write_track(const std::filesystem::path& path, const attention::ConditionTrack& track);
attention::ConditionTrack read_track(const std::filesystem::path& path);
void write_cameras(const std::filesystem::path& path, const std::vector<std::pair<std::string, splat::Camera>>& cameras);
std::vector<std::pair<std::string, splat::Camera>> read_cameras(const std::filesystem::path& path);

std::string frame_name(std::size_t t);

}  // namespace asp::scene
