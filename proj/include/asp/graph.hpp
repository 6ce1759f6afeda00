// Copyright 2026 The audiosplat Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Define-by-run reverse-mode differentiation over NdArray values. Building a
// node evaluates it immediately; backward() walks the nodes in reverse
// creation order, which is a valid topological order because inputs always
// precede their consumers.

#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "asp/ndarray.hpp"
#include "asp/param_store.hpp"

namespace asp::ad {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const NdArray& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Graph& graph() const noexcept { return *graph_; }
  bool valid() const noexcept { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

using GradientMap = std::map<std::string, NdArray>;

/// Receives the gradient of the node output, the node's own value, and one
/// accumulator per input. Accumulators of inputs that need no gradient are
/// nullptr. Accumulators are zero-initialized and shaped like the input.
using BackwardFn =
    std::function<void(const NdArray& grad_out, const NdArray& out, std::span<NdArray* const> grad_in)>;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(NdArray value, std::string label = "const");
  /// Trainable leaf. Gradients are reported under `name`.
  Var parameter(std::string name, NdArray value);
  Var parameter(const ParamStore& store, const std::string& name);
  /// Parameter leaf that is trainable only when `trainable` is set, so frozen
  /// parameters keep their names in error messages.
  Var parameter(const ParamStore& store, const std::string& name, bool trainable);

  /// Adds a node whose value was computed by the caller.
  Var custom(std::string op, std::vector<Var> inputs, NdArray value, BackwardFn backward);

  const NdArray& value(const Var& v) const { return nodes_.at(v.id()).value; }
  bool requires_grad(const Var& v) const { return nodes_.at(v.id()).requires_grad; }
  /// "#<id> '<op>'" used in diagnostics.
  std::string describe(const Var& v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse pass from a scalar node. Returns the gradient of every trainable
  /// leaf reachable from `loss`, keyed by parameter name.
  GradientMap backward(const Var& loss);
  /// Gradient of any node after backward(); nullptr if none was produced.
  const NdArray* gradient(const Var& v) const;

 private:
  struct Node {
    std::string op;
    std::string name;
    std::vector<std::size_t> inputs;
    NdArray value;
    BackwardFn backward;
    NdArray grad;
    bool requires_grad = false;
    bool is_parameter = false;
    bool has_grad = false;
  };

  Var push(Node node);
  void check_owned(const Var& v) const;

  std::deque<Node> nodes_;
};

/// Test hook: scales every input gradient produced by nodes whose op equals
/// `op` by `factor`. Pass an empty op to clear. Used to prove that the
/// verification suites detect a corrupted analytic gradient.
void set_gradient_fault(const std::string& op, double factor);
void clear_gradient_fault();

enum class Transpose { No, Yes };

// Elementwise arithmetic broadcasts numpy-style (trailing dimensions aligned).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
inline Var hadamard(Var a, Var b) { return mul(a, b); }
Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);

Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var abs(Var a);
Var sigmoid(Var a);
/// x * sigmoid(x)
Var silu(Var a);

/// Row-wise softmax over the last axis of a rank-2 array, max-subtracted.
Var softmax_rows(Var a);

Var sum(Var a);
Var mean(Var a);
/// Reduction of a rank-2 array along `axis` (0: over rows, 1: over columns).
Var sum(Var a, std::size_t axis);
Var mean(Var a, std::size_t axis);

/// Rank-2 product with optional transposition of either operand.
Var matmul(Var a, Var b, Transpose ta = Transpose::No, Transpose tb = Transpose::No);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);
Var broadcast_to(Var a, const Shape& shape);

/// Splits the rows of a rank-2 array into `groups` contiguous blocks of
/// near-equal size (block g spans rows [floor(g*N/groups), floor((g+1)*N/groups)))
/// and returns the mean row of each block.
Var group_mean_rows(Var a, std::size_t groups);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }

/// Block boundaries used by group_mean_rows.
std::vector<std::size_t> group_bounds(std::size_t rows, std::size_t groups);

}  // namespace asp::ad
