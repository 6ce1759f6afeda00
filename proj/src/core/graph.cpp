// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#include "asp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "asp/error.hpp"
#include "asp/simd.hpp"

namespace asp::ad {
namespace {

struct Fault {
  std::mutex mu;
  std::string op;
  double factor = 1.0;
};

Fault& fault() {
  static Fault f;
  return f;
}

}  // namespace

void set_gradient_fault(const std::string& op, double factor) {
  std::lock_guard lock(fault().mu);
  fault().op = op;
  fault().factor = factor;
}

void clear_gradient_fault() { set_gradient_fault("", 1.0); }

const NdArray& Var::value() const { return graph_->value(*this); }

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Graph::check_owned(const Var& v) const {
  if (!v.valid() || &v.graph() != this || v.id() >= nodes_.size()) {
    throw ValidationError("graph: variable does not belong to this graph");
  }
}

Var Graph::constant(NdArray value, std::string label) {
  Node n;
  n.op = std::move(label);
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::parameter(std::string name, NdArray value) {
  Node n;
  n.op = "param:" + name;
  n.name = std::move(name);
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_parameter = true;
  return push(std::move(n));
}

Var Graph::parameter(const ParamStore& store, const std::string& name) { return parameter(name, store.at(name)); }

Var Graph::parameter(const ParamStore& store, const std::string& name, bool trainable) {
  if (trainable) return parameter(store, name);
  return constant(store.at(name), "frozen:" + name);
}

Var Graph::custom(std::string op, std::vector<Var> inputs, NdArray value, BackwardFn backward) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  for (const Var& in : inputs) {
    check_owned(in);
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return push(std::move(n));
}

std::string Graph::describe(const Var& v) const {
  const Node& n = nodes_.at(v.id());
  return "#" + std::to_string(v.id()) + " '" + n.op + "' " + shape_string(n.value.shape());
}

GradientMap Graph::backward(const Var& loss) {
  check_owned(loss);
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss node " + describe(loss) + " is not scalar");
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = NdArray();
  }
  Node& root = nodes_[loss.id()];
  root.grad = NdArray(root.value.shape(), 1.0);
  root.has_grad = true;

  std::string fault_op;
  double fault_factor = 1.0;
  {
    std::lock_guard lock(fault().mu);
    fault_op = fault().op;
    fault_factor = fault().factor;
  }

  std::vector<NdArray> scratch;
  std::vector<NdArray*> ptrs;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    scratch.clear();
    scratch.resize(n.inputs.size());
    ptrs.assign(n.inputs.size(), nullptr);
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      const Node& in = nodes_[n.inputs[i]];
      if (!in.requires_grad) continue;
      scratch[i] = NdArray(in.value.shape(), 0.0);
      ptrs[i] = &scratch[i];
    }
    n.backward(n.grad, n.value, ptrs);
    const bool faulted = !fault_op.empty() && n.op == fault_op;
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      if (!ptrs[i]) continue;
      Node& in = nodes_[n.inputs[i]];
      if (faulted) {
        for (double& g : scratch[i].data()) g *= fault_factor;
      }
      if (!in.has_grad) {
        in.grad = std::move(scratch[i]);
        in.has_grad = true;
      } else {
        auto dst = in.grad.data();
        auto src = scratch[i].data();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      }
    }
  }

  GradientMap out;
  for (Node& n : nodes_) {
    if (!n.is_parameter) continue;
    NdArray g = n.has_grad ? n.grad : NdArray(n.value.shape(), 0.0);
    auto [it, inserted] = out.emplace(n.name, g);
    if (!inserted) {
      for (std::size_t k = 0; k < g.size(); ++k) it->second[k] += g[k];
    }
  }
  return out;
}

const NdArray* Graph::gradient(const Var& v) const {
  const Node& n = nodes_.at(v.id());
  return n.has_grad ? &n.grad : nullptr;
}

// ---------------------------------------------------------------------------
// Primitives

namespace {

[[noreturn]] void shape_fail(const std::string& op, const std::vector<Var>& inputs, const std::string& detail) {
  std::string msg = "shape mismatch at '" + op + "'";
  if (!detail.empty()) msg += " (" + detail + ")";
  msg += ": inputs";
  for (const Var& v : inputs) msg += " " + v.graph().describe(v);
  throw ShapeError(msg);
}

void same_graph(const std::string& op, const Var& a, const Var& b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw ValidationError("'" + op + "': operands belong to different graphs");
  }
}

bool broadcast_shape(const Shape& a, const Shape& b, Shape& out) {
  const std::size_t r = std::max(a.size(), b.size());
  out.assign(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1) return false;
    out[i] = std::max(da, db);
  }
  return true;
}

template <class Forward, class Deriv>
Var unary(const char* op, Var a, Forward f, Deriv d) {
  const NdArray& x = a.value();
  NdArray y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const NdArray* xp = &x;
  return a.graph().custom(op, {a}, std::move(y),
                          [xp, d](const NdArray& go, const NdArray& yv, std::span<NdArray* const> gi) {
                            NdArray& gx = *gi[0];
                            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * d((*xp)[i], yv[i]);
                          });
}

enum class BinOp { Add, Sub, Mul, Div };

Var binary(const char* op, BinOp kind, Var a, Var b) {
  same_graph(op, a, b);
  if (a.shape() != b.shape()) {
    Shape s;
    if (!broadcast_shape(a.shape(), b.shape(), s)) shape_fail(op, {a, b}, "not broadcastable");
    if (a.shape() != s) a = broadcast_to(a, s);
    if (b.shape() != s) b = broadcast_to(b, s);
  }
  const NdArray& x = a.value();
  const NdArray& y = b.value();
  NdArray z(x.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    switch (kind) {
      case BinOp::Add: z[i] = x[i] + y[i]; break;
      case BinOp::Sub: z[i] = x[i] - y[i]; break;
      case BinOp::Mul: z[i] = x[i] * y[i]; break;
      case BinOp::Div: z[i] = x[i] / y[i]; break;
    }
  }
  const NdArray* xp = &x;
  const NdArray* yp = &y;
  return a.graph().custom(op, {a, b}, std::move(z), [kind, xp, yp](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
    const NdArray& x = *xp;
    const NdArray& y = *yp;
    if (NdArray* ga = gi[0]) {
      for (std::size_t i = 0; i < go.size(); ++i) {
        switch (kind) {
          case BinOp::Add:
          case BinOp::Sub: (*ga)[i] += go[i]; break;
          case BinOp::Mul: (*ga)[i] += go[i] * y[i]; break;
          case BinOp::Div: (*ga)[i] += go[i] / y[i]; break;
        }
      }
    }
    if (NdArray* gb = gi[1]) {
      for (std::size_t i = 0; i < go.size(); ++i) {
        switch (kind) {
          case BinOp::Add: (*gb)[i] += go[i]; break;
          case BinOp::Sub: (*gb)[i] -= go[i]; break;
          case BinOp::Mul: (*gb)[i] += go[i] * x[i]; break;
          case BinOp::Div: (*gb)[i] -= go[i] * x[i] / (y[i] * y[i]); break;
        }
      }
    }
  });
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void require_rank2(const char* op, const Var& a) {
  if (a.value().rank() != 2) shape_fail(op, {a}, "expected rank 2");
}

}  // namespace

Var add(Var a, Var b) { return binary("add", BinOp::Add, a, b); }
Var sub(Var a, Var b) { return binary("sub", BinOp::Sub, a, b); }
Var mul(Var a, Var b) { return binary("mul", BinOp::Mul, a, b); }
Var div(Var a, Var b) { return binary("div", BinOp::Div, a, b); }

Var neg(Var a) {
  return unary("neg", a, [](double x) { return -x; }, [](double, double) { return -1.0; });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double value) {
  return unary("add_scalar", a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sin(Var a) {
  return unary("sin", a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Var cos(Var a) {
  return unary("cos", a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Var abs(Var a) {
  return unary(
      "abs", a, [](double x) { return std::fabs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var silu(Var a) {
  return unary(
      "silu", a, [](double x) { return x * sigmoid_value(x); },
      [](double x, double) {
        const double s = sigmoid_value(x);
        return s * (1.0 + x * (1.0 - s));
      });
}

Var softmax_rows(Var a) {
  require_rank2("softmax_rows", a);
  const NdArray& x = a.value();
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  NdArray y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    auto xr = x.row(r);
    auto yr = y.row(r);
    const double m = *std::max_element(xr.begin(), xr.end());
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - m);
      s += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= s;
  }
  return a.graph().custom("softmax_rows", {a}, std::move(y),
                          [rows, cols](const NdArray& go, const NdArray& yv, std::span<NdArray* const> gi) {
                            NdArray& gx = *gi[0];
                            for (std::size_t r = 0; r < rows; ++r) {
                              double d = 0.0;
                              for (std::size_t c = 0; c < cols; ++c) d += go(r, c) * yv(r, c);
                              for (std::size_t c = 0; c < cols; ++c) gx(r, c) += yv(r, c) * (go(r, c) - d);
                            }
                          });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.graph().custom("sum", {a}, NdArray::scalar(s), [](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
    const double g = go[0];
    for (double& v : gi[0]->data()) v += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) shape_fail("mean", {a}, "empty array");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var sum(Var a, std::size_t axis) {
  require_rank2("sum_axis", a);
  if (axis > 1) shape_fail("sum_axis", {a}, "axis out of range");
  const NdArray& x = a.value();
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  NdArray y(axis == 0 ? Shape{cols} : Shape{rows}, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[axis == 0 ? c : r] += x(r, c);
  return a.graph().custom("sum_axis", {a}, std::move(y),
                          [axis, rows, cols](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            NdArray& gx = *gi[0];
                            for (std::size_t r = 0; r < rows; ++r)
                              for (std::size_t c = 0; c < cols; ++c) gx(r, c) += go[axis == 0 ? c : r];
                          });
}

Var mean(Var a, std::size_t axis) {
  require_rank2("mean_axis", a);
  const std::size_t n = a.value().dim(axis > 1 ? 1 : axis);
  if (n == 0) shape_fail("mean_axis", {a}, "empty axis");
  return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

namespace {

NdArray transpose_value(const NdArray& x) {
  const std::size_t r = x.dim(0);
  const std::size_t c = x.dim(1);
  NdArray y(Shape{c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y(j, i) = x(i, j);
  return y;
}

Var transpose(Var a) {
  return a.graph().custom("transpose", {a}, transpose_value(a.value()),
                          [](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            NdArray t = transpose_value(go);
                            auto d = gi[0]->data();
                            for (std::size_t i = 0; i < d.size(); ++i) d[i] += t[i];
                          });
}

}  // namespace

Var matmul(Var a, Var b, Transpose ta, Transpose tb) {
  same_graph("matmul", a, b);
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (ta == Transpose::Yes && tb == Transpose::Yes) return matmul(transpose(a), b, Transpose::No, Transpose::Yes);

  const NdArray& x = a.value();
  const NdArray& y = b.value();
  const bool tA = ta == Transpose::Yes;
  const bool tB = tb == Transpose::Yes;
  const std::size_t m = tA ? x.dim(1) : x.dim(0);
  const std::size_t k = tA ? x.dim(0) : x.dim(1);
  const std::size_t kb = tB ? y.dim(1) : y.dim(0);
  const std::size_t n = tB ? y.dim(0) : y.dim(1);
  if (k != kb) shape_fail("matmul", {a, b}, "inner dimensions differ");

  const auto& kr = simd::active();
  NdArray z(Shape{m, n});
  if (!tA && !tB) {
    kr.gemm_nn(m, n, k, x.data().data(), y.data().data(), z.data().data(), false);
  } else if (!tA && tB) {
    kr.gemm_nt(m, n, k, x.data().data(), y.data().data(), z.data().data(), false);
  } else {
    kr.gemm_tn(m, n, k, x.data().data(), y.data().data(), z.data().data(), false);
  }
  const NdArray* xp = &x;
  const NdArray* yp = &y;
  return a.graph().custom(
      "matmul", {a, b}, std::move(z), [xp, yp, tA, tB, m, n, k](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
        const auto& kr = simd::active();
        const double* A = xp->data().data();
        const double* B = yp->data().data();
        const double* G = go.data().data();
        if (NdArray* ga = gi[0]) {
          double* dA = ga->data().data();
          if (!tA && !tB) kr.gemm_nt(m, k, n, G, B, dA, true);        // G * B^T
          else if (!tA && tB) kr.gemm_nn(m, k, n, G, B, dA, true);    // G * B
          else kr.gemm_nt(k, m, n, B, G, dA, true);                   // B * G^T
        }
        if (NdArray* gb = gi[1]) {
          double* dB = gb->data().data();
          if (!tA && !tB) kr.gemm_tn(k, n, m, A, G, dB, true);        // A^T * G
          else if (!tA && tB) kr.gemm_tn(n, k, m, G, A, dB, true);    // G^T * A
          else kr.gemm_nn(k, n, m, A, G, dB, true);                   // A * G
        }
      });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ValidationError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  if (axis >= s0.size()) shape_fail("concat", parts, "axis out of range");
  Shape out_shape = s0;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    same_graph("concat", parts[0], p);
    const Shape& s = p.shape();
    bool ok = s.size() == s0.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == s0[d];
    if (!ok) shape_fail("concat", parts, "non-concat dimensions differ");
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
  const std::size_t out_stride = out_shape[axis] * inner;

  NdArray z(out_shape);
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.shape()[axis] * inner;
    const NdArray& x = p.value();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.data().data() + o * w, w, z.data().data() + o * out_stride + offset);
    widths.push_back(w);
    offset += w;
  }
  return parts[0].graph().custom("concat", parts, std::move(z),
                                 [widths, outer, out_stride](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                                   std::size_t off = 0;
                                   for (std::size_t i = 0; i < widths.size(); ++i) {
                                     const std::size_t w = widths[i];
                                     if (NdArray* g = gi[i]) {
                                       for (std::size_t o = 0; o < outer; ++o)
                                         for (std::size_t j = 0; j < w; ++j)
                                           (*g)[o * w + j] += go[o * out_stride + off + j];
                                     }
                                     off += w;
                                   }
                                 });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Shape& s = a.shape();
  if (axis >= s.size() || begin > end || end > s[axis]) {
    shape_fail("slice", {a}, "range [" + std::to_string(begin) + "," + std::to_string(end) + ") on axis " +
                                 std::to_string(axis));
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  std::size_t inner = 1;
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  const std::size_t in_stride = s[axis] * inner;
  const std::size_t w = (end - begin) * inner;
  const std::size_t off = begin * inner;
  NdArray z(out_shape);
  const NdArray& x = a.value();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(x.data().data() + o * in_stride + off, w, z.data().data() + o * w);
  return a.graph().custom("slice", {a}, std::move(z),
                          [outer, in_stride, w, off](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            NdArray& g = *gi[0];
                            for (std::size_t o = 0; o < outer; ++o)
                              for (std::size_t j = 0; j < w; ++j) g[o * in_stride + off + j] += go[o * w + j];
                          });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.value().size()) shape_fail("reshape", {a}, "to " + shape_string(shape));
  return a.graph().custom("reshape", {a}, a.value().reshaped(std::move(shape)),
                          [](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            auto d = gi[0]->data();
                            for (std::size_t i = 0; i < d.size(); ++i) d[i] += go[i];
                          });
}

Var broadcast_to(Var a, const Shape& shape) {
  const Shape& s = a.shape();
  Shape merged;
  if (s.size() > shape.size() || !broadcast_shape(s, shape, merged) || merged != shape) {
    shape_fail("broadcast_to", {a}, "target " + shape_string(shape));
  }
  const std::size_t r = shape.size();
  // Input strides aligned to the output rank; broadcast dimensions get stride 0.
  std::vector<std::size_t> in_strides(r, 0);
  std::size_t stride = 1;
  for (std::size_t i = r; i-- > 0;) {
    const std::size_t src_axis = i + s.size();
    if (src_axis < r) continue;
    const std::size_t d = s[src_axis - r];
    in_strides[i] = d == 1 ? 0 : stride;
    stride *= d;
  }
  const std::size_t total = shape_size(shape);
  std::vector<std::size_t> src_index(total);
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t off = 0;
    for (std::size_t d = 0; d < r; ++d) off += idx[d] * in_strides[d];
    src_index[flat] = off;
    for (std::size_t d = r; d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  NdArray z(shape);
  const NdArray& x = a.value();
  for (std::size_t i = 0; i < total; ++i) z[i] = x[src_index[i]];
  return a.graph().custom("broadcast_to", {a}, std::move(z),
                          [src_index = std::move(src_index)](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            NdArray& g = *gi[0];
                            for (std::size_t i = 0; i < src_index.size(); ++i) g[src_index[i]] += go[i];
                          });
}

std::vector<std::size_t> group_bounds(std::size_t rows, std::size_t groups) {
  std::vector<std::size_t> b(groups + 1);
  for (std::size_t g = 0; g <= groups; ++g) b[g] = g * rows / groups;
  return b;
}

Var group_mean_rows(Var a, std::size_t groups) {
  require_rank2("group_mean_rows", a);
  const std::size_t rows = a.value().dim(0);
  const std::size_t cols = a.value().dim(1);
  if (groups == 0 || groups > rows) shape_fail("group_mean_rows", {a}, "groups=" + std::to_string(groups));
  auto bounds = group_bounds(rows, groups);
  NdArray z(Shape{groups, cols}, 0.0);
  const NdArray& x = a.value();
  for (std::size_t g = 0; g < groups; ++g) {
    const double inv = 1.0 / static_cast<double>(bounds[g + 1] - bounds[g]);
    for (std::size_t r = bounds[g]; r < bounds[g + 1]; ++r)
      for (std::size_t c = 0; c < cols; ++c) z(g, c) += x(r, c);
    for (std::size_t c = 0; c < cols; ++c) z(g, c) *= inv;
  }
  return a.graph().custom("group_mean_rows", {a}, std::move(z),
                          [bounds, cols, groups](const NdArray& go, const NdArray&, std::span<NdArray* const> gi) {
                            NdArray& g = *gi[0];
                            for (std::size_t k = 0; k < groups; ++k) {
                              const double inv = 1.0 / static_cast<double>(bounds[k + 1] - bounds[k]);
                              for (std::size_t r = bounds[k]; r < bounds[k + 1]; ++r)
                                for (std::size_t c = 0; c < cols; ++c) g(r, c) += go(k, c) * inv;
                            }
                          });
}

}  // namespace asp::ad
