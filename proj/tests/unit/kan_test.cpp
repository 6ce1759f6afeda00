// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "asp/error.hpp"
#include "asp/kan.hpp"
#include "test_util.hpp"

namespace asp::kan {
namespace {

// Textbook recursive Cox-de Boor, independent of the iterative table.
double cox_de_boor(const std::vector<double>& t, int j, int p, double x) {
  if (p == 0) return (t[j] <= x && x < t[j + 1]) ? 1.0 : 0.0;
  const double a = (x - t[j]) / (t[j + p] - t[j]) * cox_de_boor(t, j, p - 1, x);
  const double b = (t[j + p + 1] - x) / (t[j + p + 1] - t[j + 1]) * cox_de_boor(t, j + 1, p - 1, x);
  return a + b;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

TEST(SplineBasis, PartitionOfUnity) {
  SplineGrid grid{-1.0, 1.0, 5, 3};
  for (int i = 0; i <= 400; ++i) {
    const double x = -1.0 + 2.0 * i / 400.0;
    const auto b = spline_basis(x, grid);
    EXPECT_EQ(b.size(), 8u);
    EXPECT_NEAR(std::accumulate(b.begin(), b.end(), 0.0), 1.0, 1e-12) << x;
    for (double v : b) EXPECT_GE(v, 0.0);
  }
}

TEST(SplineBasis, LinearOrderIsOneHotAtKnots) {
  SplineGrid grid{-1.0, 1.0, 5, 1};
  const auto t = grid.knots();
  for (std::size_t j = 1; j + 1 < t.size(); ++j) {
    if (t[j] < grid.lo || t[j] > grid.hi) continue;
    const auto b = spline_basis(t[j], grid);
    int ones = 0;
    for (double v : b) {
      EXPECT_TRUE(v == 0.0 || v == 1.0) << v;
      ones += v == 1.0;
    }
    EXPECT_EQ(ones, 1);
  }
}

TEST(SplineBasis, MatchesRecursiveOracle) {
  SplineGrid grid{0.0, 1.0, 5, 3};
  const auto t = grid.knots();
  for (double x : {0.3, 0.0, 0.05, 0.5, 0.77, 0.999}) {
    const auto b = spline_basis(x, grid);
    for (int j = 0; j < static_cast<int>(b.size()); ++j) EXPECT_NEAR(b[j], cox_de_boor(t, j, 3, x), 1e-14);
  }
}

TEST(SplineBasis, ClampedOutsideSpan) {
  SplineGrid grid{-1.0, 1.0, 5, 3};
  EXPECT_EQ(spline_basis(3.5, grid), spline_basis(1.0, grid));
  EXPECT_EQ(spline_basis(-7.0, grid), spline_basis(-1.0, grid));
}

TEST(SplineBasis, DerivativeMatchesFiniteDifferences) {
  SplineGrid grid{-1.0, 1.0, 5, 3};
  const auto t = grid.knots();
  std::vector<double> b(8), d(8), bp(8), bm(8);
  for (double x : {-0.93, -0.41, 0.05, 0.33, 0.71}) {
    spline_basis(x, grid, t, b.data(), d.data());
    spline_basis(x + 1e-6, grid, t, bp.data(), nullptr);
    spline_basis(x - 1e-6, grid, t, bm.data(), nullptr);
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(d[j], (bp[j] - bm[j]) / 2e-6, 1e-6);
  }
}

KanConfig small(std::vector<std::size_t> widths) {
  KanConfig c;
  c.widths = std::move(widths);
  return c;
}

TEST(KanForward, ZeroParametersGiveZero) {
  KanNetwork net("k", small({3, 4, 2}));
  ParamStore s;
  std::mt19937_64 rng(1);
  net.init(s, rng);
  for (const auto& n : s.names()) s.at(n).fill(0.0);
  std::mt19937_64 xr(2);
  const NdArray y = net.forward(s, testing::random_array(xr, {5, 3}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(KanForward, ZeroSplinesLeaveBaseBranch) {
  KanNetwork net("k", small({3, 2}));
  ParamStore s;
  std::mt19937_64 rng(3);
  net.init(s, rng);
  s.at(net.coeffs_name(0)).fill(0.0);
  const NdArray& base = s.at(net.base_name(0));
  const NdArray x = NdArray::matrix(1, 3, {0.2, -0.7, 0.9});
  const NdArray y = net.forward(s, x);
  for (std::size_t o = 0; o < 2; ++o) {
    double want = 0.0;
    for (std::size_t i = 0; i < 3; ++i) want += base(o, i) * silu(x(0, i));
    EXPECT_NEAR(y(0, o), want, 1e-14);
  }
}

TEST(KanForward, MatchesEdgeLoopOracle) {
  KanNetwork net("k", small({4, 3}));
  ParamStore s;
  std::mt19937_64 rng(4);
  net.init(s, rng, false, 1.0);
  const NdArray& base = s.at(net.base_name(0));
  const NdArray& coeffs = s.at(net.coeffs_name(0));
  const SplineGrid& grid = net.config().grid;
  const auto t = grid.knots();
  NdArray x = testing::random_array(rng, {6, 4}, -1.2, 1.2);
  const NdArray y = net.forward(s, x);
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t o = 0; o < 3; ++o) {
      double want = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        const double xi = std::clamp(x(r, i), -1.0, 1.0);
        double edge = base(o, i) * silu(x(r, i));
        for (int q = 0; q < 8; ++q) edge += coeffs[(o * 4 + i) * 8 + q] * cox_de_boor(t, q, 3, xi);
        want += edge;
      }
      EXPECT_NEAR(y(r, o), want, 1e-12);
    }
  }
}

TEST(KanForward, RejectsWidthMismatch) {
  KanNetwork net("k", small({3, 2}));
  ParamStore s;
  std::mt19937_64 rng(5);
  net.init(s, rng);
  EXPECT_THROW(net.forward(s, NdArray(Shape{2, 4})), ShapeError);
}

TEST(KanForward, ContinuousAcrossKnots) {
  KanNetwork net("k", small({1, 4, 1}));
  ParamStore s;
  std::mt19937_64 rng(6);
  net.init(s, rng, false, 1.0);
  const auto t = net.config().grid.knots();
  for (double knot : t) {
    if (knot < -1.0 || knot > 1.0) continue;
    const double a = net.forward(s, NdArray::matrix(1, 1, {knot - 1e-9}))[0];
    const double b = net.forward(s, NdArray::matrix(1, 1, {knot + 1e-9}))[0];
    EXPECT_LT(std::fabs(a - b), 1e-6) << knot;
  }
}

TEST(MapStatic, LayoutWidths) {
  EXPECT_EQ(ParamLayout{0}.width(), 14u);  // 3 + 3 + 4 + 3 + 1
  EXPECT_EQ(ParamLayout{1}.width(), 14u + 9u);
  EXPECT_EQ(ParamLayout{3}.width(), 59u);
}

TEST(MapStatic, DeterministicAndWidthChecked) {
  const ParamLayout layout{0};
  KanNetwork net("kan_static", small({8, 16, layout.width()}));
  ParamStore s;
  std::mt19937_64 rng(7);
  net.init(s, rng);
  const NdArray f = testing::random_array(rng, {3, 8});
  EXPECT_EQ(map_static(net, s, f, layout), map_static(net, s, f, layout));
  EXPECT_EQ(map_static(net, s, f, layout).dim(1), 14u);
  EXPECT_THROW(map_static(net, s, f, ParamLayout{3}), ShapeError);
}

TEST(MapDeform, ZeroInitGivesZeroDeltas) {
  const ParamLayout layout{1};
  KanNetwork net("kan_deform", small({6, 8, layout.width()}));
  ParamStore s;
  std::mt19937_64 rng(8);
  net.init(s, rng, /*zero_last_layer=*/true);
  const NdArray d = map_deform(net, s, testing::random_array(rng, {4, 6}), layout);
  EXPECT_EQ(d.dim(1), layout.width());
  for (double v : d.data()) EXPECT_EQ(v, 0.0);
}

TEST(KanGradient, AllParametersAndInputsMatchFiniteDifferences) {
  const ParamLayout layout{0};
  KanNetwork net("kan_deform", small({3, 4, layout.width()}));
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    ParamStore s;
    net.init(s, rng, false, 1.0);
    const NdArray x = testing::random_array(rng, {3, 3}, -0.95, 0.95);
    const std::uint64_t wseed = rng();
    ad::Graph g;
    ad::Var xv = g.parameter("x", x);
    auto grads = g.backward(testing::random_projection(map_deform(g, net, s, xv, layout), wseed));
    auto loss = [&](const ParamStore& st, const NdArray& in) {
      ad::Graph h;
      return testing::random_projection(map_deform(h, net, st, h.constant(in), layout, false), wseed)
          .value()
          .item();
    };
    EXPECT_LT(ad::relative_error(grads.at("x"), ad::finite_diff([&](const NdArray& p) { return loss(s, p); }, x)),
              1e-4);
    for (const auto& name : s.names()) {
      const NdArray fd = ad::finite_diff(
          [&](const NdArray& p) {
            ParamStore st = s;
            st.at(name) = p;
            return loss(st, x);
          },
          s.at(name));
      EXPECT_LT(ad::relative_error(grads.at(name), fd), 1e-4) << name;
    }
  }
}

}  // namespace
}  // namespace asp::kan
