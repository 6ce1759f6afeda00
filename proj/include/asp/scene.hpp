// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic talking-head scenes. A hidden "oracle" Gaussian cloud (head,
// hair, eyes, nose, lips, jaw) is posed per frame from scripted signals and
// rendered with the brute-force rasterizer, so every target is exactly
// representable by a Gaussian cloud.
//
// Mouth aperture is an affine map of audio channel 0:
//
//   aperture(t) = rest_aperture + aperture_gain * audio[t][0]
//
// The lower lip, the mouth interior and the jaw move down by
// aperture(t) - rest_aperture; the interior grows with the aperture. Eye
// height shrinks by a factor (1 - 0.85 * blink). Frame t is seen by ring
// camera t mod cameras; the pose channels carry that camera's rotation
// vector and translation.

#include <array>
#include <cstdint>
#include <vector>

#include "asp/attention.hpp"
#include "asp/splatter.hpp"

namespace asp::scene {

struct SceneSpec {
  int image_size = 64;
  std::size_t frames = 200;
  std::size_t cameras = 5;
  std::size_t audio_width = 8;
  double ring_degrees = 40.0;      // cameras span [-ring, +ring] around the head
  double heldout_degrees = 10.0;   // extra neutral view never used for training
  double camera_distance = 3.0;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;

  void validate() const;
};

inline constexpr double kRestAperture = 0.02;
inline constexpr double kApertureGain = 0.16;
inline constexpr std::size_t kLandmarks = 4;  // upper lip, lower lip, left corner, right corner

double aperture_for_audio(double audio0);

struct SyntheticScene {
  SceneSpec spec;
  std::vector<splat::Camera> cameras;  // training ring
  splat::Camera heldout_camera;
  splat::Rgb background{0.0, 0.0, 0.0};
  attention::ConditionTrack track;
  std::vector<NdArray> frames;         // (H, W, 3) per frame
  std::vector<NdArray> masks;          // (H, W) lip masks per frame
  std::vector<NdArray> keypoints;      // (kLandmarks, 2) pixel positions per frame
  std::vector<double> apertures;       // world units per frame
  std::vector<NdArray> neutral;        // rest pose, one per ring camera
  NdArray heldout_neutral;
  NdArray landmarks_rest;              // (kLandmarks, 3) world positions at rest
  std::array<double, 3> bounds_lo{}, bounds_hi{};  // seed box

  std::size_t camera_for_frame(std::size_t t) const { return t % cameras.size(); }
  std::size_t train_frames() const;  // frames [0, train_frames()) train, the rest test
  void validate() const;
};

/// Oracle raw rows (SH degree 1 layout) for given mouth/eye state.
NdArray oracle_cloud(double audio0, double blink);
/// 3D landmark positions for the given mouth state, (kLandmarks, 3).
NdArray landmarks(double audio0);

/// Rotation vector (axis * angle) of a rotation matrix.
std::array<double, 3> rotation_vector(const splat::Mat3& r);

SyntheticScene generate_scene(const SceneSpec& spec);

/// Projects world points (M, 3) to pixels (M, 2).
NdArray project_points(const NdArray& points, const splat::Camera& cam);

/// Rounds images, tracks and keypoints to 32-bit float, matching the on-disk
/// format. Cameras are stored as decimal text and stay exact.
void quantize(SyntheticScene& scene);

}  // namespace asp::scene
