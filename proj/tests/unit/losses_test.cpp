// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "asp/error.hpp"
#include "asp/losses.hpp"
#include "test_util.hpp"

namespace asp::losses {
namespace {

using asp::testing::random_array;

double eval(ad::Var (*fn)(ad::Var, ad::Var), const NdArray& a, const NdArray& b) {
  ad::Graph g;
  return fn(g.constant(a), g.constant(b)).value().item();
}

// Direct SSIM: 2D window sums per pixel, zero outside the image.
double direct_ssim(const NdArray& a, const NdArray& b) {
  const int h = static_cast<int>(a.dim(0)), w = static_cast<int>(a.dim(1));
  double g1[11], norm = 0.0;
  for (int i = 0; i < 11; ++i) norm += g1[i] = std::exp(-(i - 5) * (i - 5) / 4.5);
  double total = 0.0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int dy = -5; dy <= 5; ++dy)
          for (int dx = -5; dx <= 5; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const double wt = g1[dy + 5] * g1[dx + 5] / (norm * norm);
            const double va = a[(yy * w + xx) * 3 + c], vb = b[(yy * w + xx) * 3 + c];
            mx += wt * va;
            my += wt * vb;
            sxx += wt * va * va;
            syy += wt * vb * vb;
            sxy += wt * va * vb;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        const double c1 = 1e-4, c2 = 9e-4;
        total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
  return total / (3.0 * h * w);
}

TEST(L1Loss, Examples) {
  std::mt19937_64 rng(1);
  NdArray a = random_array(rng, {8, 9, 3}, 0, 1), b = random_array(rng, {8, 9, 3}, 0, 1);
  EXPECT_EQ(eval(l1_loss, a, a), 0.0);
  EXPECT_EQ(eval(l1_loss, NdArray(Shape{4, 4, 3}, 0.0), NdArray(Shape{4, 4, 3}, 1.0)), 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  EXPECT_NEAR(eval(l1_loss, a, b), s / a.size(), 1e-15);
  EXPECT_THROW(eval(l1_loss, a, NdArray(Shape{8, 8, 3})), ShapeError);
}

TEST(DssimLoss, IdenticalIsZeroAndContrastIsPositive) {
  std::mt19937_64 rng(2);
  NdArray a = random_array(rng, {16, 16, 3}, 0, 1);
  EXPECT_EQ(eval(dssim_loss, a, a), 0.0);
  EXPECT_GT(eval(dssim_loss, NdArray(Shape{12, 12, 3}, 0.9), NdArray(Shape{12, 12, 3}, 0.1)), 0.0);
}

TEST(DssimLoss, MatchesDirectFormula) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 3; ++rep) {
    NdArray a = random_array(rng, {32, 32, 3}, 0, 1), b = random_array(rng, {32, 32, 3}, 0, 1);
    EXPECT_NEAR(eval(dssim_loss, a, b), 1.0 - direct_ssim(a, b), 1e-10);
    EXPECT_NEAR(ssim(a, b), direct_ssim(a, b), 1e-10);
  }
}

TEST(DssimLoss, SymmetricAndSizeChecked) {
  std::mt19937_64 rng(4);
  NdArray a = random_array(rng, {13, 17, 3}, 0, 1), b = random_array(rng, {13, 17, 3}, 0, 1);
  EXPECT_NEAR(eval(dssim_loss, a, b), eval(dssim_loss, b, a), 1e-12);
  EXPECT_THROW(eval(dssim_loss, NdArray(Shape{10, 12, 3}), NdArray(Shape{10, 12, 3})), ValidationError);
}

TEST(LipLoss, Examples) {
  std::mt19937_64 rng(5);
  NdArray a = random_array(rng, {6, 7, 3}, 0, 1), b = random_array(rng, {6, 7, 3}, 0, 1);
  ad::Graph g;
  EXPECT_NEAR(lip_loss(g.constant(a), g.constant(b), NdArray(Shape{6, 7}, 1.0)).value().item(),
              eval(l1_loss, a, b), 1e-15);
  NdArray mask(Shape{6, 7}, 0.0);
  std::bernoulli_distribution coin(0.4);
  for (double& m : mask.data()) m = coin(rng) ? 1.0 : 0.0;
  mask(2, 3) = 1.0;
  NdArray inside = a;
  double s = 0.0, n = 0.0;
  for (std::size_t i = 0; i < 42; ++i) {
    for (int c = 0; c < 3; ++c) {
      if (mask[i] == 1.0) {
        s += std::abs(a[3 * i + c] - b[3 * i + c]);
        n += 1.0;
      } else {
        inside[3 * i + c] = b[3 * i + c] + 0.5;
      }
    }
  }
  for (std::size_t i = 0; i < 42; ++i)
    if (mask[i] == 1.0)
      for (int c = 0; c < 3; ++c) inside[3 * i + c] = b[3 * i + c];
  EXPECT_NEAR(lip_loss(g.constant(a), g.constant(b), mask).value().item(), s / n, 1e-15);
  EXPECT_EQ(lip_loss(g.constant(inside), g.constant(b), mask).value().item(), 0.0);
  EXPECT_THROW(lip_loss(g.constant(a), g.constant(b), NdArray(Shape{6, 7}, 0.0)), ValidationError);
  EXPECT_THROW(lip_loss(g.constant(a), g.constant(b), NdArray(Shape{7, 6}, 1.0)), ShapeError);
}

TEST(StageLosses, ComponentSums) {
  std::mt19937_64 rng(6);
  NdArray a = random_array(rng, {12, 12, 3}, 0, 1), b = random_array(rng, {12, 12, 3}, 0, 1);
  NdArray mask(Shape{12, 12}, 0.0);
  for (std::size_t i = 40; i < 70; ++i) mask[i] = 1.0;
  ad::Graph g;
  ad::Var x = g.constant(a), y = g.constant(b);
  const double l1 = l1_loss(x, y).value().item();
  const double ds = dssim_loss(x, y).value().item();
  const double lip = lip_loss(x, y, mask).value().item();
  LossWeights w;
  EXPECT_NEAR(stage1_loss(x, y, w).value().item(), l1 + 0.2 * ds, 1e-15);
  EXPECT_NEAR(stage2_loss(x, y, mask, w).value().item(), l1 + 0.2 * ds + 0.5 * lip, 1e-15);
  LossWeights no_dssim{0.0, 0.0, 0.0};
  EXPECT_EQ(stage1_loss(x, y, no_dssim).value().item(), l1);
  EXPECT_EQ(stage2_loss(x, y, mask, no_dssim).value().item(), l1);
  LossWeights with_lpips{0.2, 1.0, 0.5};
  EXPECT_EQ(stage1_loss(x, y, with_lpips).value().item(), stage1_loss(x, y, w).value().item());
  EXPECT_EQ(stage2_loss(x, x, mask, w).value().item(), 0.0);
  EXPECT_THROW(stage1_loss(x, y, LossWeights{-1.0, 0.0, 0.0}), ValidationError);
}

TEST(LossGradients, MatchFiniteDifferences) {
  NdArray mask(Shape{12, 13}, 0.0);
  for (std::size_t i = 30; i < 90; i += 2) mask[i] = 1.0;
  const LossWeights w;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    std::mt19937_64 rng(seed);
    NdArray a = random_array(rng, {12, 13, 3}, 0, 1), b = random_array(rng, {12, 13, 3}, 0, 1);
    EXPECT_LT(asp::testing::gradient_check([](ad::Graph&, const std::vector<ad::Var>& v) { return l1_loss(v[0], v[1]); },
                                           {a, b}),
              1e-4);
    EXPECT_LT(asp::testing::gradient_check(
                  [](ad::Graph&, const std::vector<ad::Var>& v) { return dssim_loss(v[0], v[1]); }, {a, b}),
              1e-4);
    EXPECT_LT(asp::testing::gradient_check(
                  [&](ad::Graph&, const std::vector<ad::Var>& v) { return lip_loss(v[0], v[1], mask); }, {a, b}),
              1e-4);
    EXPECT_LT(asp::testing::gradient_check(
                  [&](ad::Graph&, const std::vector<ad::Var>& v) { return stage2_loss(v[0], v[1], mask, w); },
                  {a, b}),
              1e-4);
  }
}

}  // namespace
}  // namespace asp::losses
