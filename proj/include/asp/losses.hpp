// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Image losses over (H, W, 3) arrays. Masks are (H, W) with values in {0, 1}.

#include "asp/graph.hpp"

namespace asp::losses {

struct LossWeights {
  double dssim = 0.2;
  double lpips = 0.0;  // accepted, but the perceptual term is a zero stub
  double lip = 0.5;

  void validate() const;
};

/// Mean absolute difference over all pixels and channels.
ad::Var l1_loss(ad::Var img, ad::Var gt);

/// 1 - mean SSIM, 11x11 Gaussian window (sigma 1.5), zero-padded "same"
/// windows, per channel then averaged. Images must be at least 11x11.
ad::Var dssim_loss(ad::Var img, ad::Var gt);

/// Mean absolute difference over the mask support (all three channels).
ad::Var lip_loss(ad::Var img, ad::Var gt, const NdArray& mask);

/// Always zero: no pretrained perceptual network ships with this project.
ad::Var lpips_loss(ad::Var img, ad::Var gt);

ad::Var stage1_loss(ad::Var img, ad::Var gt, const LossWeights& w);
ad::Var stage2_loss(ad::Var img, ad::Var gt, const NdArray& mask, const LossWeights& w);

/// The 11-tap normalized Gaussian used by SSIM.
std::vector<double> ssim_window();

/// Mean SSIM of two (H, W, 3) images, value only.
double ssim(const NdArray& a, const NdArray& b);

}  // namespace asp::losses
