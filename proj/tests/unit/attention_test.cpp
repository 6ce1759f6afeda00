// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "asp/attention.hpp"
#include "asp/error.hpp"
#include "test_util.hpp"

namespace asp::attention {
namespace {

using asp::testing::random_array;

// Plain triple loop, no graph.
NdArray loop_sdp(const NdArray& q, const NdArray& k, const NdArray& v) {
  const std::size_t nq = q.dim(0), nk = k.dim(0), d = q.dim(1), dv = v.dim(1);
  NdArray out(Shape{nq, dv});
  for (std::size_t i = 0; i < nq; ++i) {
    std::vector<double> w(nk);
    double mx = -1e300;
    for (std::size_t j = 0; j < nk; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q(i, c) * k(j, c);
      w[j] = s / std::sqrt(double(d));
      mx = std::max(mx, w[j]);
    }
    double z = 0.0;
    for (double& x : w) z += (x = std::exp(x - mx));
    for (std::size_t j = 0; j < nk; ++j)
      for (std::size_t c = 0; c < dv; ++c) out(i, c) += w[j] / z * v(j, c);
  }
  return out;
}

NdArray loop_affine(const NdArray& x, const NdArray& w, const NdArray& b) {
  NdArray out(Shape{x.dim(0), w.dim(1)});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t j = 0; j < w.dim(1); ++j) {
      double s = b[j];
      for (std::size_t c = 0; c < x.dim(1); ++c) s += x(i, c) * w(c, j);
      out(i, j) = s;
    }
  return out;
}

void expect_near(const NdArray& a, const NdArray& b, double tol) {
  ASSERT_EQ(a.shape(), b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "at " << i;
}

ParamStore random_store(std::size_t spatial, std::size_t audio, std::size_t d, std::uint64_t seed) {
  ParamStore store;
  AgentConfig cfg;
  cfg.d_model = d;
  std::mt19937_64 rng(seed);
  init_parameters(store, spatial, audio, cfg, rng);
  // Nonzero biases and null token so every parameter matters.
  for (const auto& name : store.names()) {
    if (name.ends_with("_b") || name.ends_with("_b1") || name.ends_with("_b2") || name.ends_with("null_token")) {
      store.set(name, random_array(rng, store.at(name).shape(), -0.5, 0.5));
    }
  }
  return store;
}

ConditionRow random_row(std::mt19937_64& rng, std::size_t audio, long t) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ConditionRow row;
  for (std::size_t i = 0; i < audio; ++i) row.audio.push_back(u(rng));
  row.blink = 0.5 * (u(rng) + 1.0);
  for (double& p : row.pose) p = 0.3 * u(rng);
  row.timestep = t;
  return row;
}

TEST(Sdp, SingleKeyReturnsValueRow) {
  std::mt19937_64 rng(1);
  NdArray q = random_array(rng, {5, 3}), k = random_array(rng, {1, 3}), v = random_array(rng, {1, 4});
  NdArray out = sdp(q, k, v);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(i, c), v(0, c));
}

TEST(Sdp, EqualLogitsAverageValues) {
  NdArray q = NdArray::matrix(1, 2, {1.0, 0.0});
  NdArray k = NdArray::matrix(3, 2, {0.0, 1.0, 0.0, -2.0, 0.0, 5.0});
  NdArray v = NdArray::matrix(3, 2, {1.0, 2.0, 3.0, 4.0, 8.0, 9.0});
  NdArray out = sdp(q, k, v);
  EXPECT_NEAR(out(0, 0), 4.0, 1e-15);
  EXPECT_NEAR(out(0, 1), 5.0, 1e-15);
}

TEST(Sdp, MatchesLoopOracle) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    NdArray q = random_array(rng, {3, 2}, -2, 2), k = random_array(rng, {3, 2}, -2, 2), v = random_array(rng, {3, 2});
    expect_near(sdp(q, k, v), loop_sdp(q, k, v), 1e-14);
  }
}

TEST(Sdp, RejectsZeroWidthAndMismatch) {
  EXPECT_THROW(sdp(NdArray(Shape{2, 0}), NdArray(Shape{2, 0}), NdArray(Shape{2, 1})), ValidationError);
  EXPECT_THROW(sdp(NdArray(Shape{2, 3}), NdArray(Shape{2, 2}), NdArray(Shape{2, 1})), ShapeError);
  EXPECT_THROW(sdp(NdArray(Shape{2, 2}), NdArray(Shape{2, 2}), NdArray(Shape{3, 1})), ShapeError);
}

TEST(Sdp, CountsMultiplyAccumulates) {
  reset_mac_count();
  sdp(NdArray(Shape{5, 3}), NdArray(Shape{7, 3}), NdArray(Shape{7, 2}));
  EXPECT_EQ(mac_count(), 5u * 7u * 3u + 5u * 7u * 2u);
}

TEST(Ppe, ZeroPhase) {
  const auto e = ppe(0, 8, 25);
  for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(e[c], c % 2 == 0 ? 0.0 : 1.0);
}

TEST(Ppe, Periodic) {
  for (long t = -30; t < 60; ++t) EXPECT_EQ(ppe(t, 16, 25), ppe(t + 25, 16, 25)) << t;
  EXPECT_EQ(ppe(7, 4, 1), ppe(0, 4, 1));
}

TEST(Ppe, FormulaOracle) {
  const auto e = ppe(3, 4, 25);
  EXPECT_DOUBLE_EQ(e[0], std::sin(3.0));
  EXPECT_DOUBLE_EQ(e[1], std::cos(3.0));
  EXPECT_DOUBLE_EQ(e[2], std::sin(3.0 / 100.0));
  EXPECT_DOUBLE_EQ(e[3], std::cos(3.0 / 100.0));
  EXPECT_THROW(ppe(0, 4, 0), ValidationError);
}

TEST(Agents, PoolingAtFullCountIsIdentity) {
  std::mt19937_64 rng(3);
  ad::Graph g;
  NdArray x = random_array(rng, {6, 4});
  EXPECT_EQ(pool_tokens(g.constant(x), 6).value(), x);
}

TEST(Agents, SingleAgentIsPerceptronOfMean) {
  const std::size_t d = 4;
  ParamStore store = random_store(3, 2, d, 4);
  std::mt19937_64 rng(5);
  NdArray x = random_array(rng, {7, d});
  ad::Graph g;
  NdArray a = make_agents(g, store, g.constant(x), 1).value();
  NdArray mean(Shape{1, d});
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t c = 0; c < d; ++c) mean(0, c) += x(i, c) / 7.0;
  NdArray h = loop_affine(mean, store.at("esaa/agent_w1"), store.at("esaa/agent_b1"));
  for (double& v : h.data()) v = v / (1.0 + std::exp(-v));
  expect_near(a, loop_affine(h, store.at("esaa/agent_w2"), store.at("esaa/agent_b2")), 1e-13);
}

TEST(Agents, GroupMeanThenPerceptronOracle) {
  const std::size_t d = 4;
  ParamStore store = random_store(3, 2, d, 6);
  std::mt19937_64 rng(7);
  NdArray x = random_array(rng, {8, d});
  ad::Graph g;
  NdArray a = make_agents(g, store, g.constant(x), 2).value();
  NdArray pooled(Shape{2, d});
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t c = 0; c < d; ++c) pooled(i / 4, c) += x(i, c) / 4.0;
  NdArray h = loop_affine(pooled, store.at("esaa/agent_w1"), store.at("esaa/agent_b1"));
  for (double& v : h.data()) v = v / (1.0 + std::exp(-v));
  expect_near(a, loop_affine(h, store.at("esaa/agent_w2"), store.at("esaa/agent_b2")), 1e-13);
}

TEST(Agents, RejectsTooManyAgents) {
  ParamStore store = random_store(3, 2, 4, 8);
  ad::Graph g;
  EXPECT_THROW(make_agents(g, store, g.constant(NdArray(Shape{3, 4})), 4), ValidationError);
  EXPECT_THROW(make_agents(g, store, g.constant(NdArray(Shape{3, 4})), 0), ValidationError);
}

TEST(AgentCount, RatioRounding) {
  AgentConfig cfg;
  EXPECT_EQ(cfg.agent_count(100), 1u);
  EXPECT_EQ(cfg.agent_count(4096), 20u);
  cfg.ratio = 0.0016;
  EXPECT_EQ(cfg.agent_count(4096), 7u);
  cfg.ratio = 1.0;
  EXPECT_EQ(cfg.agent_count(37), 37u);
}

TEST(AgentCrossAttention, SingleConditionCollapses) {
  ParamStore store = random_store(3, 2, 4, 9);
  std::mt19937_64 rng(10);
  ad::Graph g;
  NdArray cond = random_array(rng, {1, 4});
  NdArray out = agent_cross_attention(g, store, g.constant(random_array(rng, {9, 4})), g.constant(cond), 3).value();
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(out(i, c), cond(0, c), 1e-15);
}

TEST(AgentCrossAttention, SingleAgentBroadcastsOneRow) {
  ParamStore store = random_store(3, 2, 4, 11);
  std::mt19937_64 rng(12);
  ad::Graph g;
  NdArray out = agent_cross_attention(g, store, g.constant(random_array(rng, {6, 4})),
                                      g.constant(random_array(rng, {4, 4})), 1)
                    .value();
  for (std::size_t i = 1; i < 6; ++i)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(out(i, c), out(0, c));
}

TEST(AgentCrossAttention, MatchesChainedLoopOracle) {
  const std::size_t d = 4;
  ParamStore store = random_store(3, 2, d, 13);
  std::mt19937_64 rng(14);
  NdArray x = random_array(rng, {4, d}), cond = random_array(rng, {3, d});
  ad::Graph g;
  NdArray out = agent_cross_attention(g, store, g.constant(x), g.constant(cond), 2).value();
  NdArray agents = make_agents(g, store, g.constant(x), 2).value();
  expect_near(out, loop_sdp(x, agents, loop_sdp(agents, cond, cond)), 1e-13);
}

TEST(AgentCrossAttention, RejectsBadConditions) {
  ParamStore store = random_store(3, 2, 4, 15);
  ad::Graph g;
  EXPECT_THROW(agent_cross_attention(g, store, g.constant(NdArray(Shape{4, 4})), g.constant(NdArray(Shape{3, 5})), 2),
               ShapeError);
  EXPECT_THROW(agent_cross_attention(g, store, g.constant(NdArray(Shape{4, 4})), g.constant(NdArray(Shape{0, 4})), 2),
               ValidationError);
}

TEST(AgentCrossAttention, LinearVersusQuadraticCost) {
  ParamStore store = random_store(3, 2, 8, 16);
  ad::Graph g;
  auto count = [&](std::size_t n_tokens, bool full) {
    ad::Var x = g.constant(NdArray(Shape{n_tokens, 8}, 0.1));
    ad::Var c = g.constant(NdArray(Shape{4, 8}, 0.2));
    reset_mac_count();
    if (full)
      full_cross_attention(x, c);
    else
      agent_cross_attention(g, store, x, c, 2);
    return static_cast<double>(mac_count());
  };
  EXPECT_NEAR(count(512, false) / count(256, false), 2.0, 0.05);
  EXPECT_NEAR(count(512, true) / count(256, true), 4.0, 0.1);
}

TEST(FuseConditions, ZeroInitGivesPpe) {
  ParamStore store;
  AgentConfig cfg;
  cfg.d_model = 6;
  std::mt19937_64 rng(17);
  init_parameters(store, 3, 2, cfg, rng);
  for (const auto& name : store.names_with_prefix("fusion/")) store.set(name, NdArray(store.at(name).shape(), 0.0));
  ConditionRow row = random_row(rng, 2, 0);
  ad::Graph g;
  NdArray cond = fuse_conditions(g, store, row, cfg).value();
  ASSERT_EQ(cond.shape(), (Shape{kConditionTokens, 6}));
  const auto e = ppe(0, 6, 25);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(cond(r, c), e[c]);
}

TEST(FuseConditions, PerSlotOracle) {
  const std::size_t d = 5, audio = 3;
  ParamStore store = random_store(2, audio, d, 18);
  std::mt19937_64 rng(19);
  AgentConfig cfg;
  cfg.d_model = d;
  ConditionRow row = random_row(rng, audio, 41);
  ad::Graph g;
  NdArray cond = fuse_conditions(g, store, row, cfg).value();
  const auto e = ppe(41, d, 25);
  auto check = [&](std::size_t slot, const std::vector<double>& input, const std::string& prefix) {
    NdArray proj = loop_affine(NdArray(Shape{1, input.size()}, input), store.at(prefix + "_w"), store.at(prefix + "_b"));
    for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(cond(slot, c), proj[c] + e[c], 1e-14) << prefix;
  };
  check(0, row.audio, "fusion/audio");
  check(1, {row.blink}, "fusion/blink");
  check(2, {row.pose.begin(), row.pose.end()}, "fusion/pose");
  for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(cond(3, c), store.at("fusion/null_token")[c] + e[c], 1e-15);
}

TEST(FuseConditions, RejectsAudioWidthMismatch) {
  ParamStore store = random_store(2, 3, 4, 20);
  std::mt19937_64 rng(21);
  AgentConfig cfg;
  cfg.d_model = 4;
  ad::Graph g;
  EXPECT_THROW(fuse_conditions(g, store, random_row(rng, 5, 0), cfg), ShapeError);
}

TEST(ConditionTrack, Validation) {
  ConditionTrack track;
  track.audio_width = 2;
  track.rows.push_back({{0.1, 0.2}, 0.5, {}, 0});
  EXPECT_NO_THROW(track.validate());
  track.rows.push_back({{0.1}, 0.5, {}, 1});
  EXPECT_THROW(track.validate(), ShapeError);
  track.rows.back() = {{0.1, 0.2}, 1.5, {}, 1};
  EXPECT_THROW(track.validate(), ValidationError);
}

TEST(DeformFeatures, ZeroTrackDependsOnlyOnSpatialAndPpe) {
  const std::size_t d = 4;
  ParamStore store = random_store(3, 2, d, 22);
  for (const auto& name : store.names_with_prefix("fusion/")) store.set(name, NdArray(store.at(name).shape(), 0.0));
  std::mt19937_64 rng(23);
  AgentConfig cfg;
  cfg.d_model = d;
  cfg.ratio = 0.25;
  NdArray x = random_array(rng, {8, 3});
  ConditionRow zero{{0.0, 0.0}, 0.0, {}, 7};
  ad::Graph g;
  NdArray out = deform_features(g, store, g.constant(x), zero, cfg).value();
  NdArray cond(Shape{4, d});
  const auto e = ppe(7, d, 25);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < d; ++c) cond(r, c) = e[c];
  NdArray projected = loop_affine(x, store.at("esaa/proj_w"), store.at("esaa/proj_b"));
  NdArray expected = agent_cross_attention(g, store, g.constant(projected), g.constant(cond), 2).value();
  expect_near(out, expected, 1e-14);
}

TEST(DeformFeatures, PermutationEquivariantAtFullAgentCount) {
  const std::size_t d = 4;
  ParamStore store = random_store(3, 2, d, 24);
  std::mt19937_64 rng(25);
  AgentConfig cfg;
  cfg.d_model = d;
  cfg.ratio = 1.0;
  NdArray x = random_array(rng, {6, 3});
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  NdArray xp(x.shape());
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < 3; ++c) xp(i, c) = x(perm[i], c);
  ConditionRow row = random_row(rng, 2, 3);
  ad::Graph g;
  NdArray a = deform_features(g, store, g.constant(x), row, cfg).value();
  NdArray b = deform_features(g, store, g.constant(xp), row, cfg).value();
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(b(i, c), a(perm[i], c), 1e-13);
}

TEST(DeformFeatures, Deterministic) {
  ParamStore store = random_store(3, 2, 8, 26);
  std::mt19937_64 rng(27);
  AgentConfig cfg;
  cfg.d_model = 8;
  cfg.ratio = 0.2;
  NdArray x = random_array(rng, {20, 3});
  ConditionRow row = random_row(rng, 2, 9);
  ad::Graph g1, g2;
  EXPECT_EQ(deform_features(g1, store, g1.constant(x), row, cfg).value(),
            deform_features(g2, store, g2.constant(x), row, cfg).value());
}

TEST(DeformFeatures, GradientMatchesFiniteDifferences) {
  const std::size_t d = 4, audio = 3;
  AgentConfig cfg;
  cfg.d_model = d;
  cfg.ratio = 0.25;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ParamStore store = random_store(3, audio, d, 100 + seed);
    std::mt19937_64 rng(200 + seed);
    NdArray x = random_array(rng, {8, 3});
    ConditionRow row = random_row(rng, audio, static_cast<long>(seed));
    auto loss = [&](ad::Graph& g, const ParamStore& s) {
      return asp::testing::random_projection(deform_features(g, s, g.constant(x), row, cfg), seed);
    };
    ad::Graph g;
    auto grads = g.backward(loss(g, store));
    for (const auto& name : store.names()) {
      auto fn = [&](const NdArray& v) {
        ParamStore s = store;
        s.set(name, v);
        ad::Graph h;
        return loss(h, s).value().item();
      };
      EXPECT_LT(ad::relative_error(grads.at(name), ad::finite_diff(fn, store.at(name))), 1e-4) << name;
    }
  }
}

}  // namespace
}  // namespace asp::attention
