// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "asp/binary_io.hpp"
#include "asp/checkpoint.hpp"
#include "asp/error.hpp"
#include "asp/finite_diff.hpp"
#include "asp/graph.hpp"
#include "test_util.hpp"

namespace asp {
namespace {

using ad::Graph;
using ad::Var;
using testing::gradient_check;
using testing::random_array;
using testing::random_projection;

TEST(Forward, Square) {
  Graph g;
  Var x = g.constant(NdArray::scalar(3.0));
  EXPECT_EQ((x * x).value().item(), 9.0);
}

TEST(Forward, SoftmaxOfEqualLogitsIsUniform) {
  Graph g;
  Var s = ad::softmax_rows(g.constant(NdArray::matrix(1, 2, {0.0, 0.0})));
  EXPECT_EQ(s.value()[0], 0.5);
  EXPECT_EQ(s.value()[1], 0.5);
}

TEST(Forward, ExpOfZero) {
  Graph g;
  EXPECT_EQ(ad::exp(g.constant(NdArray::scalar(0.0))).value().item(), 1.0);
}

TEST(Forward, ShapeMismatchNamesNode) {
  Graph g;
  Var a = g.parameter("left", NdArray(Shape{2, 3}));
  Var b = g.parameter("right", NdArray(Shape{2, 3}));
  try {
    ad::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("param:left"), std::string::npos);
    EXPECT_NE(msg.find("param:right"), std::string::npos);
  }
}

TEST(Forward, BitDeterministic) {
  std::mt19937_64 rng(7);
  NdArray a = random_array(rng, {5, 7});
  NdArray b = random_array(rng, {7, 3});
  auto run = [&] {
    Graph g;
    Var y = ad::softmax_rows(ad::matmul(g.constant(a), g.constant(b)));
    return ad::sum(ad::log(ad::add_scalar(ad::exp(y), 1.0))).value().item();
  };
  EXPECT_EQ(run(), run());
}

TEST(Backward, PowerRule) {
  Graph g;
  Var x = g.parameter("x", NdArray::scalar(3.0));
  auto grads = g.backward(x * x);
  EXPECT_EQ(grads.at("x").item(), 6.0);
}

TEST(Backward, SigmoidAtZero) {
  Graph g;
  Var x = g.parameter("x", NdArray(Shape{4}, 0.0));
  auto grads = g.backward(ad::sum(ad::sigmoid(x)));
  for (double v : grads.at("x").data()) EXPECT_EQ(v, 0.25);
}

TEST(Backward, NonScalarLossRejected) {
  Graph g;
  Var x = g.parameter("x", NdArray(Shape{2}, 1.0));
  EXPECT_THROW(g.backward(x), ShapeError);
}

TEST(Backward, UnreachedParameterGetsZeros) {
  Graph g;
  Var x = g.parameter("x", NdArray::scalar(2.0));
  g.parameter("unused", NdArray(Shape{3}, 1.0));
  auto grads = g.backward(x * x);
  EXPECT_EQ(grads.at("unused"), NdArray(Shape{3}, 0.0));
}

TEST(Backward, SharedParameterAccumulates) {
  Graph g;
  ParamStore store;
  store.set("w", NdArray::scalar(2.0));
  Var a = g.parameter(store, "w");
  Var b = g.parameter(store, "w");
  auto grads = g.backward(a * b);
  EXPECT_EQ(grads.at("w").item(), 4.0);
}

TEST(Backward, LinearityOfLossSum) {
  std::mt19937_64 rng(3);
  NdArray x0 = random_array(rng, {4, 3});
  auto grad_of = [&](int which) {
    Graph g;
    Var x = g.parameter("x", x0);
    Var l1 = ad::sum(ad::sin(x));
    Var l2 = ad::sum(ad::mul(ad::exp(x), x));
    Var loss = which == 0 ? l1 : which == 1 ? l2 : ad::add(l1, l2);
    return g.backward(loss).at("x");
  };
  NdArray a = grad_of(0), b = grad_of(1), c = grad_of(2);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(c[i], a[i] + b[i], 1e-12);
}

TEST(FiniteDiff, Quadratic) {
  auto g = ad::finite_diff([](const NdArray& x) { return x[0] * x[0]; }, NdArray::vector({3.0}), 1e-5);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantIsZero) {
  auto g = ad::finite_diff([](const NdArray&) { return 4.2; }, NdArray::vector({1.0, -2.0, 0.5}), 1e-5);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDiff, RejectsNonFinite) {
  EXPECT_THROW(ad::finite_diff([](const NdArray&) { return NAN; }, NdArray::vector({1.0}), 1e-5), NumericError);
  EXPECT_THROW(ad::finite_diff([](const NdArray& x) { return x[0]; }, NdArray::vector({1.0}), 0.0), ValidationError);
}

TEST(FiniteDiff, L1ImageLossMatchesBackward) {
  std::mt19937_64 rng(11);
  NdArray a = random_array(rng, {8, 8}, 0.0, 1.0);
  NdArray b = random_array(rng, {8, 8}, 0.0, 1.0);
  double err = gradient_check(
      [&](Graph& g, const std::vector<Var>& v) { return ad::mean(ad::abs(ad::sub(v[0], g.constant(b)))); }, {a});
  EXPECT_LT(err, 1e-4);
}

// Every primitive against central differences over randomized shapes.
class PrimitiveGradient : public ::testing::TestWithParam<std::string> {};

Var apply_primitive(const std::string& op, Graph& g, const std::vector<Var>& v, std::mt19937_64& shape_rng) {
  (void)shape_rng;
  if (op == "add") return ad::add(v[0], v[1]);
  if (op == "sub") return ad::sub(v[0], v[1]);
  if (op == "mul") return ad::mul(v[0], v[1]);
  if (op == "div") return ad::div(v[0], ad::add_scalar(ad::exp(v[1]), 0.5));
  if (op == "exp") return ad::exp(v[0]);
  if (op == "log") return ad::log(ad::add_scalar(ad::mul(v[0], v[0]), 0.1));
  if (op == "sin") return ad::sin(v[0]);
  if (op == "cos") return ad::cos(v[0]);
  if (op == "sigmoid") return ad::sigmoid(v[0]);
  if (op == "silu") return ad::silu(v[0]);
  if (op == "abs") return ad::abs(v[0]);
  if (op == "softmax") return ad::softmax_rows(v[0]);
  if (op == "sum") return ad::sum(v[0]);
  if (op == "mean_axis0") return ad::mean(v[0], 0);
  if (op == "sum_axis1") return ad::sum(v[0], 1);
  if (op == "matmul_nn") return ad::matmul(v[0], ad::reshape(v[1], {v[0].shape()[1], v[1].value().size() / v[0].shape()[1]}));
  if (op == "matmul_nt") return ad::matmul(v[0], v[1], ad::Transpose::No, ad::Transpose::Yes);
  if (op == "matmul_tn") return ad::matmul(v[0], v[1], ad::Transpose::Yes, ad::Transpose::No);
  if (op == "matmul_tt") return ad::matmul(v[0], v[1], ad::Transpose::Yes, ad::Transpose::Yes);
  if (op == "concat0") return ad::concat({v[0], v[1]}, 0);
  if (op == "concat1") return ad::concat({v[0], v[1]}, 1);
  if (op == "slice") return ad::slice(v[0], 1, 1, v[0].shape()[1]);
  if (op == "broadcast") return ad::mul(v[0], ad::broadcast_to(ad::slice(v[1], 0, 0, 1), v[0].shape()));
  if (op == "group_mean") return ad::group_mean_rows(v[0], std::max<std::size_t>(1, v[0].shape()[0] / 2));
  (void)g;
  throw std::runtime_error("unknown op " + op);
}

TEST_P(PrimitiveGradient, MatchesFiniteDifferences) {
  const std::string op = GetParam();
  std::mt19937_64 rng(std::hash<std::string>{}(op));
  std::uniform_int_distribution<std::size_t> extent(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t r = extent(rng) + 1, c = extent(rng);
    std::vector<NdArray> inputs;
    if (op == "matmul_nn") {
      std::size_t k = extent(rng);
      inputs = {random_array(rng, {r, c}), random_array(rng, {c, k})};
    } else if (op == "matmul_nt") {
      inputs = {random_array(rng, {r, c}), random_array(rng, {extent(rng), c})};
    } else if (op == "matmul_tn") {
      inputs = {random_array(rng, {r, c}), random_array(rng, {r, extent(rng)})};
    } else if (op == "matmul_tt") {
      inputs = {random_array(rng, {r, c}), random_array(rng, {extent(rng), r})};
    } else if (op == "concat0") {
      inputs = {random_array(rng, {r, c}), random_array(rng, {extent(rng), c})};
    } else if (op == "concat1") {
      inputs = {random_array(rng, {r, c}), random_array(rng, {r, extent(rng)})};
    } else if (op == "slice") {
      inputs = {random_array(rng, {r, c + 1})};
    } else if (op == "abs") {
      // keep away from the kink at zero
      NdArray a = random_array(rng, {r, c}, 0.1, 1.0);
      for (std::size_t i = 0; i < a.size(); i += 2) a[i] = -a[i];
      inputs = {a};
    } else {
      inputs = {random_array(rng, {r, c}), random_array(rng, {r, c})};
    }
    const std::uint64_t wseed = rng();
    worst = std::max(worst, gradient_check(
                                [&](Graph& g, const std::vector<Var>& v) {
                                  std::mt19937_64 unused(0);
                                  return random_projection(apply_primitive(op, g, v, unused), wseed);
                                },
                                inputs));
  }
  EXPECT_LT(worst, 1e-4) << op;
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGradient,
                         ::testing::Values("add", "sub", "mul", "div", "exp", "log", "sin", "cos", "sigmoid", "silu",
                                           "abs", "softmax", "sum", "mean_axis0", "sum_axis1", "matmul_nn",
                                           "matmul_nt", "matmul_tn", "matmul_tt", "concat0", "concat1", "slice",
                                           "broadcast", "group_mean"));

TEST(Softmax, RowsSumToOne) {
  std::mt19937_64 rng(5);
  Graph g;
  Var s = ad::softmax_rows(g.constant(random_array(rng, {20, 9}, -30.0, 30.0)));
  for (std::size_t r = 0; r < 20; ++r) {
    double total = 0.0;
    for (double v : s.value().row(r)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  Graph g;
  Var s = ad::softmax_rows(g.constant(NdArray::matrix(1, 3, {1000.0, 1000.0, -1000.0})));
  EXPECT_EQ(s.value()[0], 0.5);
  EXPECT_EQ(s.value()[2], 0.0);
}

TEST(Broadcast, RowVectorOverMatrix) {
  Graph g;
  Var m = g.constant(NdArray::matrix(2, 3, {1, 2, 3, 4, 5, 6}));
  Var b = g.parameter("b", NdArray::vector({10, 20, 30}));
  Var y = ad::add(m, b);
  EXPECT_EQ(y.value(), NdArray::matrix(2, 3, {11, 22, 33, 14, 25, 36}));
  auto grads = g.backward(ad::sum(y));
  EXPECT_EQ(grads.at("b"), NdArray::vector({2, 2, 2}));
}

TEST(GroupMean, BlocksAreContiguous) {
  Graph g;
  Var x = g.constant(NdArray::matrix(5, 1, {1, 2, 3, 4, 5}));
  Var y = ad::group_mean_rows(x, 2);  // rows [0,2) and [2,5)
  EXPECT_EQ(y.value(), NdArray::matrix(2, 1, {1.5, 4.0}));
  EXPECT_THROW(ad::group_mean_rows(x, 6), ShapeError);
}

TEST(FaultHook, ScalesChosenOp) {
  ad::set_gradient_fault("sin", 2.0);
  Graph g;
  Var x = g.parameter("x", NdArray::scalar(0.0));
  auto grads = g.backward(ad::sin(x));
  ad::clear_gradient_fault();
  EXPECT_EQ(grads.at("x").item(), 2.0);
}

TEST(Checkpoint, RoundTripIsExactForFloatValues) {
  ParamStore p;
  std::mt19937_64 rng(1);
  p.set("triplane/xy/level0", random_array(rng, {16, 2}));
  p.set("kan_static/layer0/coeffs", random_array(rng, {3, 2, 8}));
  p.set_meta("sh_degree", 1.0);
  p.round_to_float();
  auto path = std::filesystem::temp_directory_path() / "asp_ckpt_test.bin";
  save_checkpoint(path, p);
  ParamStore q = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(p, q);
  EXPECT_EQ(q.meta("sh_degree"), 1.0);
}

TEST(Checkpoint, RejectsGarbage) {
  auto path = std::filesystem::temp_directory_path() / "asp_ckpt_garbage.bin";
  io::write_text_atomic(path, "not a checkpoint");
  EXPECT_THROW(load_checkpoint(path), ValidationError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace asp
