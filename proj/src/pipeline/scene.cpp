// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/scene.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "asp/error.hpp"
#include "asp/layout.hpp"

namespace asp::scene {
namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr std::array<double, 3> kRadii{0.5, 0.65, 0.5};
constexpr double kMouthY = -0.30;

using Vec3 = splat::Vec3;

struct OracleBuilder {
  ParamLayout layout{1};
  std::vector<double> rows;
  std::size_t count = 0;

  void add(const Vec3& p, const Vec3& s, const Vec3& rgb, double opacity,
           const std::array<double, 4>& q = {1, 0, 0, 0}) {
    const std::size_t base = rows.size();
    rows.resize(base + layout.width(), 0.0);
    double* r = rows.data() + base;
    for (int i = 0; i < 3; ++i) {
      r[ParamLayout::kPosition + i] = p[i];
      r[ParamLayout::kScale + i] = std::log(s[i]);
      r[ParamLayout::kSh + i] = (rgb[i] - 0.5) / kC0;
    }
    for (int i = 0; i < 4; ++i) r[ParamLayout::kRotation + i] = q[i];
    r[layout.opacity()] = std::log(opacity / (1.0 - opacity));
    ++count;
  }

  NdArray build() const { return NdArray(Shape{count, layout.width()}, rows); }
};

Vec3 normalize(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / n, v[1] / n, v[2] / n};
}

// Quaternion turning +z onto n.
std::array<double, 4> align_z(const Vec3& n) {
  const double w = 1.0 + n[2];
  if (w < 1e-9) return {0.0, 1.0, 0.0, 0.0};
  const double norm = std::sqrt(w * w + n[1] * n[1] + n[0] * n[0]);
  return {w / norm, -n[1] / norm, n[0] / norm, 0.0};
}

double surface_z(double x, double y) {
  const double u = 1.0 - (x / kRadii[0]) * (x / kRadii[0]) - (y / kRadii[1]) * (y / kRadii[1]);
  return -kRadii[2] * std::sqrt(std::max(u, 0.0));
}

// Smooth aperiodic signal in [0, 1] from a few incommensurate sinusoids.
struct SmoothSignal {
  std::array<double, 3> period{}, phase{}, weight{};
  double sharpness = 2.5;

  explicit SmoothSignal(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> p(7.0, 41.0), ph(0.0, 2.0 * std::numbers::pi), w(0.5, 1.0);
    for (int k = 0; k < 3; ++k) {
      period[k] = p(rng);
      phase[k] = ph(rng);
      weight[k] = w(rng);
    }
  }

  double operator()(double t) const {
    double s = 0.0, norm = 0.0;
    for (int k = 0; k < 3; ++k) {
      s += weight[k] * std::sin(2.0 * std::numbers::pi * t / period[k] + phase[k]);
      norm += weight[k];
    }
    return 1.0 / (1.0 + std::exp(-sharpness * 2.0 * s / norm));
  }
};

}  // namespace

void SceneSpec::validate() const {
  if (image_size < 16) throw ValidationError("scene: image_size must be at least 16");
  if (frames < 1) throw ValidationError("scene: frames must be at least 1");
  if (cameras < 1) throw ValidationError("scene: cameras must be at least 1");
  if (audio_width < 1) throw ValidationError("scene: audio_width must be at least 1");
  if (!(camera_distance > 1.5)) throw ValidationError("scene: camera_distance must exceed 1.5");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ValidationError("scene: test_fraction must be in [0, 1)");
  if (!(std::abs(ring_degrees) < 80.0) || !(std::abs(heldout_degrees) < 80.0)) {
    throw ValidationError("scene: camera angles must stay within 80 degrees of frontal");
  }
}

double aperture_for_audio(double audio0) { return kRestAperture + kApertureGain * audio0; }

NdArray landmarks(double audio0) {
  const double drop = aperture_for_audio(audio0) - kRestAperture;
  return NdArray::matrix(kLandmarks, 3,
                         {0.0, kMouthY + 0.02, -0.455,         //
                          0.0, kMouthY - 0.02 - drop, -0.455,  //
                          -0.12, kMouthY, -0.44,               //
                          0.12, kMouthY, -0.44});
}

NdArray oracle_cloud(double audio0, double blink) {
  const double aperture = aperture_for_audio(audio0);
  const double drop = aperture - kRestAperture;
  const Vec3 light = normalize({-0.3, 0.5, -1.0});
  OracleBuilder b;

  // Skin and hair on a Fibonacci lattice over the head ellipsoid.
  const int lattice = 260;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < lattice; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / lattice;
    const double r = std::sqrt(1.0 - y * y);
    const Vec3 d{r * std::cos(golden * i), y, r * std::sin(golden * i)};
    Vec3 p{kRadii[0] * d[0], kRadii[1] * d[1], kRadii[2] * d[2]};
    const Vec3 n = normalize({d[0] / kRadii[0], d[1] / kRadii[1], d[2] / kRadii[2]});
    const bool hair = d[1] > 0.55 || d[2] > 0.3;
    const double shade = 0.7 + 0.3 * std::max(0.0, n[0] * light[0] + n[1] * light[1] + n[2] * light[2]);
    const Vec3 base = hair ? Vec3{0.28, 0.17, 0.10} : Vec3{0.88, 0.68, 0.56};
    if (!hair && p[1] < kMouthY - 0.06 && p[2] < -0.15) p[1] -= drop;  // jaw
    b.add(p, {0.085, 0.085, 0.03}, {base[0] * shade, base[1] * shade, base[2] * shade}, 0.95, align_z(n));
  }

  const double lid = 1.0 - 0.85 * std::clamp(blink, 0.0, 1.0);
  for (double sx : {-0.17, 0.17}) {
    const double z = surface_z(sx, 0.12);
    b.add({sx, 0.12, z - 0.012}, {0.06, 0.035 * lid, 0.012}, {0.95, 0.95, 0.95}, 0.97);
    b.add({sx, 0.12, z - 0.026}, {0.022, 0.022 * lid, 0.008}, {0.08, 0.08, 0.14}, 0.97);
    b.add({sx, 0.25, surface_z(sx, 0.25) - 0.012}, {0.07, 0.015, 0.01}, {0.22, 0.14, 0.09}, 0.95);
  }
  b.add({0.0, -0.05, -0.55}, {0.045, 0.09, 0.05}, {0.80, 0.60, 0.50}, 0.95);

  const double zl = surface_z(0.0, kMouthY) - 0.012;
  b.add({0.0, kMouthY - 0.5 * drop, zl + 0.004}, {0.085, 0.35 * aperture + 0.003, 0.01}, {0.15, 0.03, 0.05}, 0.95);
  for (double sx : {-0.08, 0.0, 0.08}) {
    b.add({sx, kMouthY + 0.02, zl}, {0.05, 0.018, 0.015}, {0.72, 0.22, 0.24}, 0.95);
    b.add({sx * 0.9, kMouthY - 0.02 - drop, zl}, {0.05, 0.02, 0.015}, {0.72, 0.22, 0.24}, 0.95);
  }
  return b.build();
}

std::array<double, 3> rotation_vector(const splat::Mat3& r) {
  const double cos_a = std::clamp(0.5 * (r[0][0] + r[1][1] + r[2][2] - 1.0), -1.0, 1.0);
  const double angle = std::acos(cos_a);
  const std::array<double, 3> v{r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]};
  const double s = std::sin(angle);
  if (s < 1e-12) return {0.0, 0.0, 0.0};
  return {v[0] * angle / (2.0 * s), v[1] * angle / (2.0 * s), v[2] * angle / (2.0 * s)};
}

NdArray project_points(const NdArray& points, const splat::Camera& cam) {
  NdArray out(Shape{points.dim(0), 2});
  for (std::size_t i = 0; i < points.dim(0); ++i) {
    const Vec3 t = cam.to_camera({points(i, 0), points(i, 1), points(i, 2)});
    out(i, 0) = cam.fx * t[0] / t[2] + cam.cx;
    out(i, 1) = cam.fy * t[1] / t[2] + cam.cy;
  }
  return out;
}

std::size_t SyntheticScene::train_frames() const {
  const auto test = static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(frames.size())));
  return frames.size() - test;
}

void SyntheticScene::validate() const {
  spec.validate();
  const std::size_t n = track.size();
  if (frames.size() != n || masks.size() != n || keypoints.size() != n || apertures.size() != n) {
    throw ValidationError("scene: frames, track, masks and keypoints differ in length");
  }
  if (neutral.size() != cameras.size() || cameras.empty()) throw ValidationError("scene: one neutral view per camera");
  track.validate();
  const Shape img{static_cast<std::size_t>(spec.image_size), static_cast<std::size_t>(spec.image_size), 3};
  for (const auto& f : frames)
    if (f.shape() != img) throw ValidationError("scene: frame shape " + shape_string(f.shape()));
  for (const auto& m : masks)
    if (m.shape() != Shape{img[0], img[1]}) throw ValidationError("scene: mask shape " + shape_string(m.shape()));
}

namespace {

NdArray lip_mask(double audio0, const splat::Camera& cam) {
  const double drop = aperture_for_audio(audio0) - kRestAperture;
  const double z = surface_z(0.0, kMouthY) - 0.012;
  NdArray corners = NdArray::matrix(4, 3,
                                    {-0.14, kMouthY + 0.05, z, 0.14, kMouthY + 0.05, z,  //
                                     -0.14, kMouthY - 0.055 - drop, z, 0.14, kMouthY - 0.055 - drop, z});
  const NdArray px = project_points(corners, cam);
  double x0 = 1e9, y0 = 1e9, x1 = -1e9, y1 = -1e9;
  for (std::size_t i = 0; i < 4; ++i) {
    x0 = std::min(x0, px(i, 0));
    x1 = std::max(x1, px(i, 0));
    y0 = std::min(y0, px(i, 1));
    y1 = std::max(y1, px(i, 1));
  }
  NdArray mask(Shape{static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width)}, 0.0);
  for (int y = std::max(0, int(std::floor(y0)) - 1); y <= std::min(cam.height - 1, int(std::ceil(y1)) + 1); ++y)
    for (int x = std::max(0, int(std::floor(x0)) - 1); x <= std::min(cam.width - 1, int(std::ceil(x1)) + 1); ++x)
      mask(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
  return mask;
}

NdArray render_oracle(double audio0, double blink, const splat::Camera& cam, const splat::Rgb& bg) {
  const ParamLayout layout{1};
  const auto splats = splat::project_cloud(gaussians::activate(oracle_cloud(audio0, blink), layout), cam);
  return splat::rasterize_reference(splats, cam, bg);
}

splat::Camera ring_camera(const SceneSpec& spec, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double d = spec.camera_distance;
  return splat::Camera::look_at({d * std::sin(a), 0.0, -d * std::cos(a)}, {0.0, -0.05, 0.0}, {0.0, 1.0, 0.0},
                                1.75 * spec.image_size, spec.image_size, spec.image_size);
}

}  // namespace

SyntheticScene generate_scene(const SceneSpec& spec) {
  spec.validate();
  SyntheticScene s;
  s.spec = spec;
  for (std::size_t c = 0; c < spec.cameras; ++c) {
    const double deg = spec.cameras == 1 ? 0.0
                                         : -spec.ring_degrees + 2.0 * spec.ring_degrees * static_cast<double>(c) /
                                                                    static_cast<double>(spec.cameras - 1);
    s.cameras.push_back(ring_camera(spec, deg));
  }
  s.heldout_camera = ring_camera(spec, spec.heldout_degrees);
  s.bounds_lo = {-0.56, -0.86, -0.58};
  s.bounds_hi = {0.56, 0.72, 0.56};
  s.landmarks_rest = landmarks(0.0);

  std::mt19937_64 rng(spec.seed);
  SmoothSignal mouth(rng);
  std::vector<SmoothSignal> channels;
  for (std::size_t c = 1; c < spec.audio_width; ++c) channels.emplace_back(rng);
  std::uniform_real_distribution<double> mix(0.2, 0.7);
  std::vector<double> mixing(spec.audio_width, 0.0);
  for (std::size_t c = 1; c < spec.audio_width; ++c) mixing[c] = mix(rng);
  std::vector<double> blink(spec.frames, 0.0);
  {
    std::uniform_int_distribution<int> first(5, 20), gap(30, 60);
    const double profile[] = {0.3, 0.8, 1.0, 0.8, 0.3};
    for (std::size_t t = static_cast<std::size_t>(first(rng)); t < spec.frames; t += static_cast<std::size_t>(gap(rng)))
      for (std::size_t k = 0; k < 5 && t + k < spec.frames; ++k) blink[t + k] = profile[k];
  }

  s.track.audio_width = spec.audio_width;
  for (std::size_t t = 0; t < spec.frames; ++t) {
    attention::ConditionRow row;
    // Frame 0 always starts at rest.
    const double a0 = t == 0 ? 0.0 : mouth(static_cast<double>(t));
    row.audio.push_back(a0);
    for (std::size_t c = 1; c < spec.audio_width; ++c) {
      row.audio.push_back(mixing[c] * a0 + (1.0 - mixing[c]) * channels[c - 1](static_cast<double>(t)));
    }
    row.blink = blink[t];
    const splat::Camera& cam = s.cameras[t % spec.cameras];
    const auto rv = rotation_vector(cam.rotation);
    for (int i = 0; i < 3; ++i) {
      row.pose[i] = rv[i];
      row.pose[3 + i] = cam.translation[i];
    }
    row.timestep = static_cast<long>(t);
    s.track.rows.push_back(std::move(row));
  }

  s.frames.resize(spec.frames);
  s.masks.resize(spec.frames);
  s.keypoints.resize(spec.frames);
  s.apertures.resize(spec.frames);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const auto& row = s.track.rows[t];
    const splat::Camera& cam = s.cameras[t % spec.cameras];
    s.frames[t] = render_oracle(row.audio[0], row.blink, cam, s.background);
    s.masks[t] = lip_mask(row.audio[0], cam);
    s.keypoints[t] = project_points(landmarks(row.audio[0]), cam);
    s.apertures[t] = aperture_for_audio(row.audio[0]);
  }
  for (const auto& cam : s.cameras) s.neutral.push_back(render_oracle(0.0, 0.0, cam, s.background));
  s.heldout_neutral = render_oracle(0.0, 0.0, s.heldout_camera, s.background);
  quantize(s);
  return s;
}

void quantize(SyntheticScene& scene) {
  auto q = [](NdArray& a) {
    for (double& v : a.data()) v = static_cast<float>(v);
  };
  for (auto* list : {&scene.frames, &scene.masks, &scene.keypoints, &scene.neutral})
    for (auto& a : *list) q(a);
  q(scene.heldout_neutral);
  q(scene.landmarks_rest);
  for (double& a : scene.apertures) a = static_cast<float>(a);
  for (auto& row : scene.track.rows) {
    for (double& v : row.audio) v = static_cast<float>(v);
    row.blink = static_cast<float>(row.blink);
    for (double& v : row.pose) v = static_cast<float>(v);
  }
}

}  // namespace asp::scene
