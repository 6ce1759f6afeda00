// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "asp/error.hpp"
#include "asp/parallel.hpp"
#include "asp/pipeline.hpp"

namespace asp::pipeline {

std::vector<NdArray> sequence_raw(const ParamStore& store, const attention::ConditionTrack& track) {
  track.validate();
  const Model model = Model::from_store(store);
  const NdArray base = model.static_raw(store);
  const NdArray spatial = model.spatial_features(store);
  std::vector<NdArray> out;
  out.reserve(track.size());
  for (const auto& row : track.rows) out.push_back(gaussians::compose_raw(base, model.deltas(store, spatial, row)));
  return out;
}

std::vector<NdArray> render_sequence(const ParamStore& store, const attention::ConditionTrack& track,
                                     const std::vector<splat::Camera>& cameras, const splat::Rgb& background) {
  if (cameras.empty()) throw ValidationError("render: no cameras");
  const Model model = Model::from_store(store);
  const auto raws = sequence_raw(store, track);
  std::vector<NdArray> frames;
  frames.reserve(raws.size());
  for (std::size_t t = 0; t < raws.size(); ++t) {
    frames.push_back(splat::render(gaussians::activate(raws[t], model.layout()), cameras[t % cameras.size()],
                                   background));
  }
  return frames;
}

double mse(const NdArray& a, const NdArray& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("mse: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
  if (a.empty()) throw ValidationError("mse: empty images");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double psnr(const NdArray& a, const NdArray& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(e);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ValidationError("pearson: sequences differ in length");
  if (a.size() < 2) throw ValidationError("pearson: need at least two samples");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

Markers select_markers(const NdArray& static_raw, const NdArray& landmarks_rest, std::size_t per_landmark) {
  const std::size_t n = static_raw.dim(0);
  const std::size_t count = landmarks_rest.dim(0);
  if (per_landmark == 0 || per_landmark * count > n) throw ValidationError("markers: invalid per_landmark");
  auto dist2 = [&](std::size_t i, std::size_t l) {
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double e = static_raw(i, ParamLayout::kPosition + c) - landmarks_rest(l, c);
      s += e * e;
    }
    return s;
  };
  // Every Gaussian belongs to its nearest landmark only, so nearby
  // landmarks never share markers.
  std::vector<std::vector<std::pair<double, std::size_t>>> owned(count);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t l = 1; l < count; ++l)
      if (dist2(i, l) < dist2(i, best)) best = l;
    owned[best].push_back({dist2(i, best), i});
  }
  Markers m;
  for (std::size_t l = 0; l < count; ++l) {
    auto& d = owned[l];
    if (d.size() < per_landmark) throw ValidationError("markers: too few Gaussians near landmark " + std::to_string(l));
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(per_landmark), d.end());
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < per_landmark; ++k) members.push_back(d[k].second);
    m.members.push_back(std::move(members));
  }
  return m;
}

NdArray marker_pixels(const Markers& markers, const NdArray& raw, const splat::Camera& cam) {
  NdArray centers(Shape{markers.members.size(), 3}, 0.0);
  for (std::size_t l = 0; l < markers.members.size(); ++l) {
    const auto& mem = markers.members[l];
    for (std::size_t i : mem)
      for (std::size_t c = 0; c < 3; ++c) centers(l, c) += raw(i, ParamLayout::kPosition + c);
    for (std::size_t c = 0; c < 3; ++c) centers(l, c) /= static_cast<double>(mem.size());
  }
  return scene::project_points(centers, cam);
}

EvalReport evaluate(const std::vector<NdArray>& frames, const std::vector<NdArray>& gt,
                    const std::vector<NdArray>& rendered_keypoints, const std::vector<NdArray>& gt_keypoints) {
  if (frames.size() != gt.size()) throw ValidationError("eval: frame count differs from ground truth");
  if (rendered_keypoints.size() != gt_keypoints.size() || rendered_keypoints.size() != frames.size()) {
    throw ValidationError("eval: keypoint count differs from frame count");
  }
  if (frames.empty()) throw ValidationError("eval: no frames");
  EvalReport r;
  r.frames.resize(frames.size());
  parallel_for(frames.size(), [&](std::size_t i) {
    FrameMetrics& f = r.frames[i];
    f.frame = i;
    f.psnr = psnr(frames[i], gt[i]);
    f.ssim = losses::ssim(frames[i], gt[i]);
    const NdArray& a = rendered_keypoints[i];
    const NdArray& b = gt_keypoints[i];
    if (a.shape() != b.shape() || a.rank() != 2 || a.dim(1) != 2) throw ShapeError("eval: keypoint shapes differ");
    double d = 0.0;
    for (std::size_t k = 0; k < a.dim(0); ++k) d += std::hypot(a(k, 0) - b(k, 0), a(k, 1) - b(k, 1));
    f.keypoint_distance = d / static_cast<double>(a.dim(0));
    if (a.dim(0) >= 2) f.aperture_proxy = std::hypot(a(0, 0) - a(1, 0), a(0, 1) - a(1, 1));
  });
  const double n = static_cast<double>(frames.size());
  for (const auto& f : r.frames) {
    r.mean_psnr += f.psnr / n;
    r.mean_ssim += f.ssim / n;
    r.mean_keypoint_distance += f.keypoint_distance / n;
  }
  return r;
}

EvalReport evaluate_model(const ParamStore& store, const scene::SyntheticScene& scene, std::size_t begin,
                          std::size_t end) {
  if (begin >= end || end > scene.frames.size()) throw ValidationError("eval: invalid frame range");
  const Model model = Model::from_store(store);
  const Markers markers = select_markers(model.static_raw(store), scene.landmarks_rest);
  if (markers.members.size() < 2) throw ValidationError("eval: need upper and lower lip landmarks");
  attention::ConditionTrack track;
  track.audio_width = scene.track.audio_width;
  track.rows.assign(scene.track.rows.begin() + static_cast<std::ptrdiff_t>(begin),
                    scene.track.rows.begin() + static_cast<std::ptrdiff_t>(end));
  const auto raws = sequence_raw(store, track);
  std::vector<NdArray> frames, gt, kp, gt_kp;
  for (std::size_t i = 0; i < raws.size(); ++i) {
    const std::size_t t = begin + i;
    const splat::Camera& cam = scene.cameras[scene.camera_for_frame(t)];
    frames.push_back(splat::render(gaussians::activate(raws[i], model.layout()), cam, scene.background));
    gt.push_back(scene.frames[t]);
    kp.push_back(marker_pixels(markers, raws[i], cam));
    gt_kp.push_back(scene.keypoints[t]);
  }
  EvalReport r = evaluate(frames, gt, kp, gt_kp);
  // Opening relative to the static cloud seen by the same camera.
  const NdArray base = model.static_raw(store);
  std::vector<double> rest;
  for (const auto& cam : scene.cameras) {
    const NdArray px = marker_pixels(markers, base, cam);
    rest.push_back(std::hypot(px(0, 0) - px(1, 0), px(0, 1) - px(1, 1)));
  }
  std::vector<double> proxy, audio;
  for (std::size_t i = 0; i < r.frames.size(); ++i) {
    r.frames[i].frame = begin + i;
    r.frames[i].aperture_proxy -= rest[scene.camera_for_frame(begin + i)];
    r.frames[i].audio0 = scene.track.rows[begin + i].audio[0];
    proxy.push_back(r.frames[i].aperture_proxy);
    audio.push_back(r.frames[i].audio0);
  }
  r.aperture_pearson = r.frames.size() >= 2 ? pearson(proxy, audio) : 0.0;
  return r;
}

}  // namespace asp::pipeline
