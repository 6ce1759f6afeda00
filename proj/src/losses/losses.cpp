// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/losses.hpp"

#include <cmath>
#include <memory>

#include "asp/error.hpp"

namespace asp::losses {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_image(const ad::Var& img, const ad::Var& gt, const char* what) {
  if (img.shape() != gt.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + img.graph().describe(img) + " vs " +
                     gt.graph().describe(gt));
  }
  if (img.shape().size() != 3 || img.shape()[2] != 3) {
    throw ShapeError(std::string(what) + ": expected (H, W, 3), got " + img.graph().describe(img));
  }
}

// Zero-padded "same" separable blur of one channel of an (H, W, C) array
// into a dense (H, W) plane. The kernel is symmetric, so this is also its
// own adjoint.
void blur(const double* src, std::size_t stride, std::size_t h, std::size_t w, const std::vector<double>& k,
          double* dst) {
  const int r = kWindow / 2;
  std::vector<double> tmp(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) {
        const long xx = static_cast<long>(x) + t;
        if (xx < 0 || xx >= static_cast<long>(w)) continue;
        s += k[t + r] * src[(y * w + static_cast<std::size_t>(xx)) * stride];
      }
      tmp[y * w + x] = s;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (int t = -r; t <= r; ++t) {
        const long yy = static_cast<long>(y) + t;
        if (yy < 0 || yy >= static_cast<long>(h)) continue;
        s += k[t + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      dst[y * w + x] = s;
    }
}

struct SsimMaps {
  // Per channel, (H, W) planes.
  std::vector<double> mx, my, exx, eyy, exy, s;
};

SsimMaps ssim_maps(const NdArray& a, const NdArray& b) {
  const std::size_t h = a.dim(0), w = a.dim(1), n = h * w;
  const auto k = ssim_window();
  SsimMaps m;
  for (auto* v : {&m.mx, &m.my, &m.exx, &m.eyy, &m.exy, &m.s}) v->assign(3 * n, 0.0);
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t c = 0; c < 3; ++c) {
    const double* pa = a.storage().data() + c;
    const double* pb = b.storage().data() + c;
    for (std::size_t i = 0; i < n; ++i) {
      xx[i] = pa[3 * i] * pa[3 * i];
      yy[i] = pb[3 * i] * pb[3 * i];
      xy[i] = pa[3 * i] * pb[3 * i];
    }
    const std::size_t o = c * n;
    blur(pa, 3, h, w, k, m.mx.data() + o);
    blur(pb, 3, h, w, k, m.my.data() + o);
    blur(xx.data(), 1, h, w, k, m.exx.data() + o);
    blur(yy.data(), 1, h, w, k, m.eyy.data() + o);
    blur(xy.data(), 1, h, w, k, m.exy.data() + o);
    for (std::size_t i = o; i < o + n; ++i) {
      const double mx = m.mx[i], my = m.my[i];
      const double a1 = 2.0 * mx * my + kC1, a2 = 2.0 * (m.exy[i] - mx * my) + kC2;
      const double b1 = mx * mx + my * my + kC1, b2 = (m.exx[i] - mx * mx) + (m.eyy[i] - my * my) + kC2;
      m.s[i] = a1 * a2 / (b1 * b2);
    }
  }
  return m;
}

void check_ssim_size(const NdArray& a) {
  if (a.dim(0) < kWindow || a.dim(1) < kWindow) {
    throw ValidationError("dssim: image " + shape_string(a.shape()) + " is smaller than the 11x11 window");
  }
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {dssim, lpips, lip})
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("loss weights must be finite and non-negative");
}

std::vector<double> ssim_window() {
  std::vector<double> k(kWindow);
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    sum += k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
  }
  for (double& v : k) v /= sum;
  return k;
}

double ssim(const NdArray& a, const NdArray& b) {
  if (a.shape() != b.shape() || a.rank() != 3 || a.dim(2) != 3) throw ShapeError("ssim: expected equal (H, W, 3)");
  check_ssim_size(a);
  const SsimMaps m = ssim_maps(a, b);
  double sum = 0.0;
  for (double v : m.s) sum += v;
  return sum / static_cast<double>(m.s.size());
}

ad::Var l1_loss(ad::Var img, ad::Var gt) {
  check_image(img, gt, "l1_loss");
  return ad::mean(ad::abs(ad::sub(img, gt)));
}

ad::Var dssim_loss(ad::Var img, ad::Var gt) {
  check_image(img, gt, "dssim_loss");
  check_ssim_size(img.value());
  auto maps = std::make_shared<SsimMaps>(ssim_maps(img.value(), gt.value()));
  double sum = 0.0;
  for (double v : maps->s) sum += v;
  const double count = static_cast<double>(maps->s.size());
  NdArray value = NdArray::scalar(1.0 - sum / count);
  auto backward = [maps, count, a = img.value(), b = gt.value()](const NdArray& g, const NdArray&,
                                                                   std::span<NdArray* const> grad_in) {
    const std::size_t h = a.dim(0), w = a.dim(1), n = h * w;
    const double gs = -g.item() / count;
    const auto k = ssim_window();
    std::vector<double> gmx(n), gmy(n), gxx(n), gyy(n), gxy(n);
    std::vector<double> bmx(n), bmy(n), bxx(n), byy(n), bxy(n);
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t o = c * n;
      for (std::size_t i = 0; i < n; ++i) {
        const double mx = maps->mx[o + i], my = maps->my[o + i], s = maps->s[o + i];
        const double a1 = 2.0 * mx * my + kC1, a2 = 2.0 * (maps->exy[o + i] - mx * my) + kC2;
        const double b1 = mx * mx + my * my + kC1;
        const double b2 = (maps->exx[o + i] - mx * mx) + (maps->eyy[o + i] - my * my) + kC2;
        const double d_a1 = gs * a2 / (b1 * b2), d_a2 = gs * a1 / (b1 * b2);
        const double d_b1 = -gs * s / b1, d_b2 = -gs * s / b2;
        gmx[i] = 2.0 * my * d_a1 - 2.0 * my * d_a2 + 2.0 * mx * d_b1 - 2.0 * mx * d_b2;
        gmy[i] = 2.0 * mx * d_a1 - 2.0 * mx * d_a2 + 2.0 * my * d_b1 - 2.0 * my * d_b2;
        gxy[i] = 2.0 * d_a2;
        gxx[i] = d_b2;
        gyy[i] = d_b2;
      }
      blur(gmx.data(), 1, h, w, k, bmx.data());
      blur(gmy.data(), 1, h, w, k, bmy.data());
      blur(gxx.data(), 1, h, w, k, bxx.data());
      blur(gyy.data(), 1, h, w, k, byy.data());
      blur(gxy.data(), 1, h, w, k, bxy.data());
      for (std::size_t i = 0; i < n; ++i) {
        const double x = a.storage()[3 * i + c], y = b.storage()[3 * i + c];
        if (grad_in[0]) grad_in[0]->data()[3 * i + c] += bmx[i] + 2.0 * x * bxx[i] + y * bxy[i];
        if (grad_in[1]) grad_in[1]->data()[3 * i + c] += bmy[i] + 2.0 * y * byy[i] + x * bxy[i];
      }
    }
  };
  return img.graph().custom("dssim", {img, gt}, std::move(value), std::move(backward));
}

ad::Var lip_loss(ad::Var img, ad::Var gt, const NdArray& mask) {
  check_image(img, gt, "lip_loss");
  const std::size_t h = img.shape()[0], w = img.shape()[1];
  if (mask.shape() != Shape{h, w}) {
    throw ShapeError("lip_loss: mask " + shape_string(mask.shape()) + " does not match image " +
                     shape_string(img.shape()));
  }
  NdArray expanded(img.shape());
  std::size_t support = 0;
  for (std::size_t i = 0; i < h * w; ++i) {
    const double m = mask.storage()[i];
    if (m != 0.0 && m != 1.0) throw ValidationError("lip_loss: mask values must be 0 or 1");
    support += m == 1.0;
    for (int c = 0; c < 3; ++c) expanded.data()[3 * i + c] = m;
  }
  if (support == 0) throw ValidationError("lip_loss: empty mask");
  ad::Var masked = ad::mul(ad::abs(ad::sub(img, gt)), img.graph().constant(std::move(expanded), "lip_mask"));
  return ad::scale(ad::sum(masked), 1.0 / (3.0 * static_cast<double>(support)));
}

ad::Var lpips_loss(ad::Var img, ad::Var gt) {
  check_image(img, gt, "lpips_loss");
  return img.graph().constant(NdArray::scalar(0.0), "lpips_stub");
}

ad::Var stage1_loss(ad::Var img, ad::Var gt, const LossWeights& w) {
  w.validate();
  ad::Var loss = l1_loss(img, gt);
  if (w.dssim != 0.0) loss = ad::add(loss, ad::scale(dssim_loss(img, gt), w.dssim));
  if (w.lpips != 0.0) loss = ad::add(loss, ad::scale(lpips_loss(img, gt), w.lpips));
  return loss;
}

ad::Var stage2_loss(ad::Var img, ad::Var gt, const NdArray& mask, const LossWeights& w) {
  ad::Var loss = stage1_loss(img, gt, w);
  if (w.lip != 0.0) loss = ad::add(loss, ad::scale(lip_loss(img, gt, mask), w.lip));
  return loss;
}

}  // namespace asp::losses
