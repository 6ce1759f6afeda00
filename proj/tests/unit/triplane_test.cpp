// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "asp/error.hpp"
#include "asp/triplane.hpp"
#include "test_util.hpp"

namespace asp::triplane {
namespace {

TriplaneConfig small_config() {
  TriplaneConfig c;
  c.levels = 2;
  c.base_resolution = 4;
  c.growth_factor = 2.0;
  c.log2_table_size = 6;
  c.features = 2;
  return c;
}

ParamStore random_tables(const TriplaneConfig& c, std::uint64_t seed) {
  ParamStore s;
  std::mt19937_64 rng(seed);
  init_tables(s, c, rng);
  return s;
}

TEST(HashIndex, ZeroCellIsZero) {
  for (int level = 0; level < 4; ++level) EXPECT_EQ(hash_index(0, 0, 16), 0u);
}

TEST(HashIndex, FirstPrimeIsOne) { EXPECT_EQ(hash_index(1, 0, 1u << 14), 1u); }

TEST(HashIndex, FrozenValue) {
  // (3 ^ 7 * 2654435761) mod 2^14, evaluated offline.
  EXPECT_EQ(hash_index(3, 7, 1u << 14), 5076u);
}

TEST(HashIndex, InRange) {
  for (std::uint32_t i = 0; i < 50; ++i)
    for (std::uint32_t j = 0; j < 50; ++j) EXPECT_LT(hash_index(i, j, 64), 64u);
}

TEST(EncodePlane, GridNodeReturnsStoredRow) {
  TriplaneConfig c = small_config();
  c.levels = 1;
  ParamStore s = random_tables(c, 1);
  // Node (1, 3) of the 4-cell grid sits at u = -1 + 2*1/4, v = -1 + 2*3/4.
  const auto f = TriplaneEncoder(c).encode_plane(s, Plane::XY, -0.5, 0.5);
  const NdArray& t = s.at(table_name(Plane::XY, 0));
  const auto row = hash_index(1, 3, c.table_size());
  EXPECT_EQ(f[0], t(row, 0));
  EXPECT_EQ(f[1], t(row, 1));
}

TEST(EncodePlane, CellCenterIsCornerMean) {
  TriplaneConfig c = small_config();
  c.levels = 1;
  ParamStore s = random_tables(c, 2);
  const NdArray& t = s.at(table_name(Plane::YZ, 0));
  // Cell (2, 1) spans u in [0, 0.5], v in [-0.5, 0].
  const auto f = TriplaneEncoder(c).encode_plane(s, Plane::YZ, 0.25, -0.25);
  for (int ch = 0; ch < 2; ++ch) {
    const double expect = 0.25 * (t(hash_index(2, 1, 64), ch) + t(hash_index(3, 1, 64), ch) +
                                  t(hash_index(2, 2, 64), ch) + t(hash_index(3, 2, 64), ch));
    EXPECT_NEAR(f[ch], expect, 1e-15);
  }
}

// Independent scalar bilinear interpolation used as the oracle.
std::vector<double> oracle_plane(const ParamStore& s, const TriplaneConfig& c, Plane p, double u, double v) {
  std::vector<double> out;
  for (int l = 0; l < c.levels; ++l) {
    const double R = std::floor(c.base_resolution * std::pow(c.growth_factor, l));
    const double gu = (u + 1) / 2 * R, gv = (v + 1) / 2 * R;
    const double i = std::min(std::floor(gu), R - 1), j = std::min(std::floor(gv), R - 1);
    const double a = gu - i, b = gv - j;
    const NdArray& t = s.at(table_name(p, l));
    auto at = [&](double ci, double cj, int f) {
      const std::uint64_t h = (static_cast<std::uint64_t>(ci)) ^ (static_cast<std::uint64_t>(cj) * 2654435761ULL);
      return t(h % c.table_size(), f);
    };
    for (int f = 0; f < c.features; ++f) {
      out.push_back((1 - a) * (1 - b) * at(i, j, f) + a * (1 - b) * at(i + 1, j, f) + (1 - a) * b * at(i, j + 1, f) +
                    a * b * at(i + 1, j + 1, f));
    }
  }
  return out;
}

TEST(EncodePlane, MatchesScalarOracle) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 3);
  TriplaneEncoder enc(c);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double u = d(rng), v = d(rng);
    for (Plane p : kPlanes) {
      const auto got = enc.encode_plane(s, p, u, v);
      const auto want = oracle_plane(s, c, p, u, v);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-14);
    }
  }
}

TEST(EncodePoint, AllOnesTablesGiveOnes) {
  const TriplaneConfig c = small_config();
  ParamStore s;
  std::mt19937_64 rng(0);
  init_tables(s, c, rng, 1.0, 1.0);
  const auto f = TriplaneEncoder(c).encode_point(s, {0.3, -0.2, 0.9});
  for (double v : f) EXPECT_EQ(v, 1.0);
}

TEST(EncodePoint, ZeroPlaneAnnihilates) {
  const TriplaneConfig c = small_config();
  ParamStore s = random_tables(c, 5);
  for (int l = 0; l < c.levels; ++l) s.at(table_name(Plane::XY, l)).fill(0.0);
  const auto f = TriplaneEncoder(c).encode_point(s, {0.1, 0.7, -0.4});
  for (double v : f) EXPECT_EQ(v, 0.0);
}

TEST(EncodePoint, IsProductOfPlaneFeatures) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 6);
  TriplaneEncoder enc(c);
  const SpatialPoint p{0.12, -0.55, 0.81};
  const auto xy = oracle_plane(s, c, Plane::XY, p.x, p.y);
  const auto yz = oracle_plane(s, c, Plane::YZ, p.y, p.z);
  const auto xz = oracle_plane(s, c, Plane::XZ, p.x, p.z);
  const auto f = enc.encode_point(s, p);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], xy[i] * yz[i] * xz[i], 1e-14);
}

TEST(EncodePoint, ZeroPropagationPerCoordinate) {
  TriplaneConfig c = small_config();
  c.levels = 1;
  ParamStore s = random_tables(c, 8);
  // Zero channel 1 of the YZ rows used by this point.
  const SpatialPoint p{0.3, 0.3, 0.3};
  const CellLookup cell = lookup_cell(p.y, p.z, c.resolution(0), c.table_size());
  for (auto r : cell.rows) s.at(table_name(Plane::YZ, 0))(r, 1) = 0.0;
  const auto f = TriplaneEncoder(c).encode_point(s, p);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_NE(f[0], 0.0);
}

TEST(EncodePoint, OutOfRangeIsClamped) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 9);
  TriplaneEncoder enc(c);
  EXPECT_EQ(enc.encode_point(s, {1.7, -3.0, 0.2}), enc.encode_point(s, {1.0, -1.0, 0.2}));
}

TEST(EncodePoint, ContinuousInsideCell) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 10);
  TriplaneEncoder enc(c);
  // Finest level has 8 cells: stay inside the cell [0.0, 0.25]^3.
  const SpatialPoint p{0.1, 0.1, 0.1};
  double prev = 1.0;
  for (double delta : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const auto a = enc.encode_point(s, p);
    const auto b = enc.encode_point(s, {p.x + delta, p.y + delta, p.z + delta});
    double diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::fabs(a[i] - b[i]));
    EXPECT_LT(diff, prev);
    prev = diff;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(EncodeBatch, RowsMatchEncodePoint) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 11);
  TriplaneEncoder enc(c);
  std::mt19937_64 rng(12);
  NdArray pts = testing::random_array(rng, {100, 3});
  for (std::size_t k = 0; k < 3; ++k) pts(1, k) = pts(0, k);  // duplicated point
  const NdArray f = enc.encode_batch(s, pts);
  for (std::size_t n = 0; n < 100; ++n) {
    const auto row = enc.encode_point(s, {pts(n, 0), pts(n, 1), pts(n, 2)});
    for (std::size_t i = 0; i < row.size(); ++i) EXPECT_EQ(f(n, i), row[i]);
  }
  for (std::size_t i = 0; i < f.dim(1); ++i) EXPECT_EQ(f(0, i), f(1, i));
}

TEST(EncodeBatch, RejectsEmptyAndBadShape) {
  const TriplaneConfig c = small_config();
  const ParamStore s = random_tables(c, 13);
  TriplaneEncoder enc(c);
  EXPECT_THROW(enc.encode_batch(s, NdArray(Shape{0, 3})), ValidationError);
  EXPECT_THROW(enc.encode_batch(s, NdArray(Shape{4, 2})), ShapeError);
}

TEST(TriplaneGradient, TablesAndPointsMatchFiniteDifferences) {
  TriplaneConfig c = small_config();
  c.log2_table_size = 4;  // small tables: every entry checked
  TriplaneEncoder enc(c);
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    ParamStore s = random_tables(c, 100 + trial);
    // Points kept away from cell boundaries of the finest grid (8 cells of width 0.25).
    NdArray pts(Shape{3, 3});
    std::uniform_int_distribution<int> cell(0, 7);
    std::uniform_real_distribution<double> frac(0.2, 0.8);
    for (double& v : pts.data()) v = -1.0 + 0.25 * (cell(rng) + frac(rng));
    const std::uint64_t wseed = rng();

    ad::Graph g;
    auto grads = g.backward(testing::random_projection(enc.encode(g, s, g.parameter("points", pts)), wseed));

    auto loss_with = [&](const ParamStore& st, const NdArray& p) {
      ad::Graph h;
      return testing::random_projection(enc.encode(h, st, h.constant(p), false), wseed).value().item();
    };
    const NdArray fd_pts = ad::finite_diff([&](const NdArray& p) { return loss_with(s, p); }, pts);
    EXPECT_LT(ad::relative_error(grads.at("points"), fd_pts), 1e-4);
    for (Plane p : kPlanes) {
      const std::string name = table_name(p, 1);
      const NdArray fd = ad::finite_diff(
          [&](const NdArray& t) {
            ParamStore st = s;
            st.at(name) = t;
            return loss_with(st, pts);
          },
          s.at(name));
      EXPECT_LT(ad::relative_error(grads.at(name), fd), 1e-4) << name;
    }
  }
}

}  // namespace
}  // namespace asp::triplane
