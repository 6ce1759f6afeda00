// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "asp/error.hpp"
#include "internal.hpp"

namespace asp::splat {
namespace {

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0)) throw ValidationError("camera: degenerate direction");
  return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width, int height) {
  const Vec3 f = normalized({target[0] - eye[0], target[1] - eye[1], target[2] - eye[2]});
  const Vec3 right = normalized(cross(f, up));
  const Vec3 down = cross(f, right);
  Camera cam;
  cam.fx = cam.fy = focal;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  cam.rotation = {right, down, f};
  for (int i = 0; i < 3; ++i) {
    cam.translation[i] = 0.0;
    for (int j = 0; j < 3; ++j) cam.translation[i] -= cam.rotation[i][j] * eye[j];
  }
  return cam;
}

Vec3 Camera::to_camera(const Vec3& p) const {
  Vec3 t = translation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i] += rotation[i][j] * p[j];
  return t;
}

Vec3 Camera::center() const {
  Vec3 c{};
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) c[j] -= rotation[i][j] * translation[i];
  return c;
}

void Camera::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw ValidationError("camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ValidationError("camera: image size must be positive");
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += rotation[i][k] * rotation[j][k];
      if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-9) throw ValidationError("camera: rotation is not orthonormal");
    }
}

Mat3 quaternion_to_matrix(const std::array<double, 4>& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

namespace detail {

std::optional<Projection> project_full(const gaussians::Gaussian& g, std::size_t index, int sh_degree,
                                  const Camera& cam, const RenderOptions& opts) {
  Projection p;
  p.t = cam.to_camera(g.position);
  const double tx = p.t[0], ty = p.t[1], tz = p.t[2];
  if (tz <= opts.near) return std::nullopt;
  const double lim_x = opts.frustum_margin * std::max(cam.cx, cam.width - cam.cx) / cam.fx;
  const double lim_y = opts.frustum_margin * std::max(cam.cy, cam.height - cam.cy) / cam.fy;
  if (std::abs(tx / tz) > lim_x || std::abs(ty / tz) > lim_y) return std::nullopt;

  p.rq = quaternion_to_matrix(g.rotation);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += p.rq[i][k] * g.scale[k] * g.scale[k] * p.rq[j][k];
      p.sigma[i][j] = s;
    }
  const double j00 = cam.fx / tz, j02 = -cam.fx * tx / (tz * tz);
  const double j11 = cam.fy / tz, j12 = -cam.fy * ty / (tz * tz);
  for (int c = 0; c < 3; ++c) {
    p.m[0][c] = j00 * cam.rotation[0][c] + j02 * cam.rotation[2][c];
    p.m[1][c] = j11 * cam.rotation[1][c] + j12 * cam.rotation[2][c];
  }
  double cov[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += p.m[a][i] * p.sigma[i][j] * p.m[b][j];
      cov[a][b] = s;
    }
  Splat2D& sp = p.splat;
  sp.index = index;
  sp.depth = tz;
  sp.mean = {cam.fx * tx / tz + cam.cx, cam.fy * ty / tz + cam.cy};
  sp.cov = {cov[0][0] + opts.cov_floor, 0.5 * (cov[0][1] + cov[1][0]), cov[1][1] + opts.cov_floor};
  const double det = sp.cov[0] * sp.cov[2] - sp.cov[1] * sp.cov[1];
  if (!(det > 0.0)) return std::nullopt;
  sp.conic = {sp.cov[2] / det, -sp.cov[1] / det, sp.cov[0] / det};
  sp.opacity = g.opacity;

  const Vec3 center = cam.center();
  Vec3 v{g.position[0] - center[0], g.position[1] - center[1], g.position[2] - center[2]};
  p.view_distance = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  for (int i = 0; i < 3; ++i) p.dir[i] = v[i] / p.view_distance;
  p.basis = sh_basis(sh_degree, p.dir);
  p.unclamped = {0.5, 0.5, 0.5};
  for (std::size_t k = 0; k < p.basis.size(); ++k)
    for (int c = 0; c < 3; ++c) p.unclamped[c] += p.basis[k] * g.sh[3 * k + c];
  for (int c = 0; c < 3; ++c) sp.color[c] = std::max(p.unclamped[c], 0.0);

  if (sp.opacity > opts.cutoff_alpha) {
    const double q_cut = 2.0 * std::log(sp.opacity / opts.cutoff_alpha);
    const double rx = std::sqrt(q_cut * sp.cov[0]);
    const double ry = std::sqrt(q_cut * sp.cov[2]);
    sp.rect = {std::max(0, static_cast<int>(std::ceil(sp.mean[0] - rx))),
               std::max(0, static_cast<int>(std::ceil(sp.mean[1] - ry))),
               std::min(cam.width, static_cast<int>(std::floor(sp.mean[0] + rx)) + 1),
               std::min(cam.height, static_cast<int>(std::floor(sp.mean[1] + ry)) + 1)};
  }
  return p;
}

void project_backward(std::span<const double> raw, const ParamLayout& layout, const Camera& cam,
                      const RenderOptions& opts, const SplatGrad& grad, std::span<double> d_raw) {
  const gaussians::Gaussian g = gaussians::activate(raw, layout);
  const auto proj = project_full(g, 0, layout.sh_degree, cam, opts);
  if (!proj) return;
  const Projection& p = *proj;
  const Splat2D& sp = p.splat;

  d_raw[layout.opacity()] += grad.opacity * g.opacity * (1.0 - g.opacity);

  Vec3 d_mu{};
  // Color.
  Vec3 d_dir{};
  const auto jac = sh_basis_jacobian(layout.sh_degree, p.dir);
  for (std::size_t k = 0; k < p.basis.size(); ++k) {
    double d_basis = 0.0;
    for (int c = 0; c < 3; ++c) {
      if (p.unclamped[c] < 0.0) continue;
      d_raw[ParamLayout::kSh + 3 * k + c] += p.basis[k] * grad.color[c];
      d_basis += grad.color[c] * g.sh[3 * k + c];
    }
    for (int i = 0; i < 3; ++i) d_dir[i] += d_basis * jac[3 * k + i];
  }
  const double dd = d_dir[0] * p.dir[0] + d_dir[1] * p.dir[1] + d_dir[2] * p.dir[2];
  for (int i = 0; i < 3; ++i) d_mu[i] += (d_dir[i] - p.dir[i] * dd) / p.view_distance;

  // Conic -> 2D covariance: dL/dK = -K^-1 G K^-1.
  const double ca = sp.conic[0], cb = sp.conic[1], cc = sp.conic[2];
  const double G[2][2] = {{grad.conic[0], 0.5 * grad.conic[1]}, {0.5 * grad.conic[1], grad.conic[2]}};
  const double Ki[2][2] = {{ca, cb}, {cb, cc}};
  double H[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double s = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s += Ki[a][i] * G[i][j] * Ki[j][b];
      H[a][b] = -s;
    }

  // cov = M Sigma M^T: dSigma = M^T H M, dM = 2 H M Sigma.
  Mat3 d_sigma{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += p.m[a][i] * H[a][b] * p.m[b][j];
      d_sigma[i][j] = s;
    }
  double d_m[2][3] = {};
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int b = 0; b < 2; ++b)
        for (int k = 0; k < 3; ++k) s += H[a][b] * p.m[b][k] * p.sigma[k][c];
      d_m[a][c] = 2.0 * s;
    }
  // M = J W.
  double d_j[2][3] = {};
  for (int a = 0; a < 2; ++a)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) d_j[a][r] += d_m[a][c] * cam.rotation[r][c];
  const double tx = p.t[0], ty = p.t[1], tz = p.t[2];
  const double fx = cam.fx, fy = cam.fy;
  const double tz2 = tz * tz, tz3 = tz2 * tz;
  Vec3 d_t{};
  d_t[0] += d_j[0][2] * (-fx / tz2) + grad.mean[0] * fx / tz;
  d_t[1] += d_j[1][2] * (-fy / tz2) + grad.mean[1] * fy / tz;
  d_t[2] += d_j[0][0] * (-fx / tz2) + d_j[0][2] * (2.0 * fx * tx / tz3) + d_j[1][1] * (-fy / tz2) +
            d_j[1][2] * (2.0 * fy * ty / tz3) - grad.mean[0] * fx * tx / tz2 - grad.mean[1] * fy * ty / tz2;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) d_mu[j] += cam.rotation[i][j] * d_t[i];
  for (int i = 0; i < 3; ++i) d_raw[ParamLayout::kPosition + i] += d_mu[i];

  // Sigma = (Rq S)(Rq S)^T.
  Mat3 d_rq{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d_mq = 0.0;
      for (int k = 0; k < 3; ++k) d_mq += 2.0 * d_sigma[i][k] * p.rq[k][j] * g.scale[j];
      d_rq[i][j] = d_mq * g.scale[j];
      d_raw[ParamLayout::kScale + j] += d_mq * p.rq[i][j] * g.scale[j];
    }

  const double w = g.rotation[0], x = g.rotation[1], y = g.rotation[2], z = g.rotation[3];
  const auto& R = d_rq;
  std::array<double, 4> d_q{};
  d_q[0] = R[0][1] * (-2 * z) + R[0][2] * (2 * y) + R[1][0] * (2 * z) + R[1][2] * (-2 * x) + R[2][0] * (-2 * y) +
           R[2][1] * (2 * x);
  d_q[1] = R[0][1] * (2 * y) + R[0][2] * (2 * z) + R[1][0] * (2 * y) + R[1][1] * (-4 * x) + R[1][2] * (-2 * w) +
           R[2][0] * (2 * z) + R[2][1] * (2 * w) + R[2][2] * (-4 * x);
  d_q[2] = R[0][0] * (-4 * y) + R[0][1] * (2 * x) + R[0][2] * (2 * w) + R[1][0] * (2 * x) + R[1][2] * (2 * z) +
           R[2][0] * (-2 * w) + R[2][1] * (2 * z) + R[2][2] * (-4 * y);
  d_q[3] = R[0][0] * (-4 * z) + R[0][1] * (-2 * w) + R[0][2] * (2 * x) + R[1][0] * (2 * w) + R[1][1] * (-4 * z) +
           R[1][2] * (2 * y) + R[2][0] * (2 * x) + R[2][1] * (2 * y);
  double norm = 0.0;
  for (int i = 0; i < 4; ++i) norm += raw[ParamLayout::kRotation + i] * raw[ParamLayout::kRotation + i];
  norm = std::sqrt(norm);
  const double qd = d_q[0] * w + d_q[1] * x + d_q[2] * y + d_q[3] * z;
  for (int i = 0; i < 4; ++i) d_raw[ParamLayout::kRotation + i] += (d_q[i] - g.rotation[i] * qd) / norm;
}

}  // namespace detail

std::optional<Splat2D> project(const gaussians::Gaussian& g, std::size_t index, int sh_degree, const Camera& cam,
                               const RenderOptions& opts) {
  auto p = detail::project_full(g, index, sh_degree, cam, opts);
  if (!p) return std::nullopt;
  return p->splat;
}

std::vector<Splat2D> project_cloud(const gaussians::GaussianCloud& cloud, const Camera& cam,
                                   const RenderOptions& opts) {
  cam.validate();
  std::vector<Splat2D> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (auto s = project(cloud.items[i], i, cloud.layout.sh_degree, cam, opts)) out.push_back(*s);
  }
  std::stable_sort(out.begin(), out.end(), [](const Splat2D& a, const Splat2D& b) { return a.depth < b.depth; });
  return out;
}

}  // namespace asp::splat
