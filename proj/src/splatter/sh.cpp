// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "asp/error.hpp"
#include "internal.hpp"

namespace asp::splat {
namespace {

constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                          0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                          -0.4570457994644658, 1.445305721320277, -0.5900435899266435};

// Forward-mode value with a gradient over (x, y, z).
struct Dual {
  double v = 0;
  Vec3 d{};
};
Dual operator-(Dual a, const Dual& b) {
  a.v -= b.v;
  for (int i = 0; i < 3; ++i) a.d[i] -= b.d[i];
  return a;
}
Dual operator*(const Dual& a, const Dual& b) {
  Dual r{a.v * b.v, {}};
  for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
Dual operator*(double s, Dual a) {
  a.v *= s;
  for (double& x : a.d) x *= s;
  return a;
}
Dual operator+(Dual a, double s) {
  a.v += s;
  return a;
}

template <class T>
void basis_impl(int degree, T x, T y, T z, T* out) {
  out[0] = T{} + kC0;
  if (degree < 1) return;
  out[1] = -kC1 * y;
  out[2] = kC1 * z;
  out[3] = -kC1 * x;
  if (degree < 2) return;
  const T xx = x * x, yy = y * y, zz = z * z;
  out[4] = kC2[0] * (x * y);
  out[5] = kC2[1] * (y * z);
  out[6] = kC2[2] * (2.0 * zz - xx - yy);
  out[7] = kC2[3] * (x * z);
  out[8] = kC2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kC3[0] * (y * (3.0 * xx - yy));
  out[10] = kC3[1] * (x * y * z);
  out[11] = kC3[2] * (y * (4.0 * zz - xx - yy));
  out[12] = kC3[3] * (z * (2.0 * zz - 3.0 * xx - 3.0 * yy));
  out[13] = kC3[4] * (x * (4.0 * zz - xx - yy));
  out[14] = kC3[5] * (z * (xx - yy));
  out[15] = kC3[6] * (x * (xx - 3.0 * yy));
}

void check_degree(int degree) {
  if (degree < 0 || degree > 3) throw ValidationError("SH degree must be in [0, 3]");
}

}  // namespace

std::vector<double> sh_basis(int degree, const Vec3& dir) {
  check_degree(degree);
  std::vector<double> out(static_cast<std::size_t>((degree + 1) * (degree + 1)));
  basis_impl(degree, dir[0], dir[1], dir[2], out.data());
  return out;
}

Rgb eval_sh(int degree, const std::vector<double>& sh, const Vec3& dir) {
  const auto basis = sh_basis(degree, dir);
  if (sh.size() != 3 * basis.size()) throw ShapeError("eval_sh: coefficient count does not match degree");
  Rgb c{0.5, 0.5, 0.5};
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (int ch = 0; ch < 3; ++ch) c[ch] += basis[k] * sh[3 * k + ch];
  for (double& v : c) v = std::max(v, 0.0);
  return c;
}

std::vector<double> sh_basis_jacobian(int degree, const Vec3& dir) {
  check_degree(degree);
  const std::size_t K = static_cast<std::size_t>((degree + 1) * (degree + 1));
  Dual x{dir[0], {1, 0, 0}}, y{dir[1], {0, 1, 0}}, z{dir[2], {0, 0, 1}};
  std::vector<Dual> out(K);
  basis_impl(degree, x, y, z, out.data());
  std::vector<double> jac(3 * K);
  for (std::size_t k = 0; k < K; ++k)
    for (int i = 0; i < 3; ++i) jac[3 * k + i] = out[k].d[i];
  return jac;
}

}  // namespace asp::splat
