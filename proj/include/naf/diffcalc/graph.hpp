#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "naf/diffcalc/tensor.hpp"

namespace naf::diffcalc {

template <typename T>
class Graph;

/// Handle to a node recorded on a Graph.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Graph<T>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<T>* graph() const { return graph_; }
  std::size_t id() const { return id_; }
  const Shape& shape() const;
  std::span<const T> value() const;
  /// Single element of a one-element node.
  T item() const;

 private:
  Graph<T>* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run tape. Build a fresh graph for every step, call backward()
/// on a scalar, then read gradients from the parameter tensors.
template <typename T>
class Graph {
 public:
  /// Backward callback: receives the node's output gradient and adds into
  /// the parents' gradient buffers via grad_of().
  using BackwardFn = std::function<void(Graph&, std::span<const T> out_grad)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> constant(Shape shape, std::vector<T> values);

  /// Leaf bound to a parameter. Gradients accumulate into `param.grad`, or
  /// into `grad_sink` when given (per-worker buffers).
  Var<T> parameter(Tensor<T>& param, std::vector<T>* grad_sink = nullptr);

  /// Records an op with a caller-supplied backward rule.
  Var<T> record(Shape shape, std::vector<T> value, std::vector<Var<T>> parents, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and runs all backward rules in reverse order.
  /// Throws invalid_input unless `loss` has exactly one element.
  void backward(Var<T> loss);

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }
  std::span<const T> value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(Var<T> v) const { return nodes_[v.id()].needs_grad; }

  /// Gradient buffer of a node, allocated on first use. Only valid inside
  /// backward callbacks or after backward() for nodes that needed gradients.
  std::span<T> grad_of(Var<T> v);

  std::size_t size() const { return nodes_.size(); }

  /// Value of the node whose backward rule is running (valid only inside
  /// a backward callback).
  std::span<const T> output() const { return nodes_[current_].value; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool needs_grad = false;
    BackwardFn backward;
    std::vector<T>* sink = nullptr;
  };

  std::deque<Node> nodes_;
  std::size_t current_ = 0;
};

// ---- ops -------------------------------------------------------------------
// All 2D ops take row-major [rows, cols] inputs. Shape errors throw
// invalid_shape naming the op.

/// [n,k] x [k,m] -> [n,m]
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// Same shape, or b of shape [m] / [1,m] broadcast over the rows of a.
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
/// Elementwise product of equal shapes.
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
template <typename T> Var<T> leaky_relu(Var<T> a, T slope);
/// Rows of a 2D table picked by index; backward scatters (repeated rows accumulate).
template <typename T> Var<T> gather_rows(Var<T> table, std::vector<std::size_t> indices);
/// Concatenation of 2D inputs with equal row counts along the last axis.
template <typename T> Var<T> concat(const std::vector<Var<T>>& parts);
/// Reductions accumulate in double and return a one-element node.
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> mean(Var<T> a);
/// mean((pred - target)^2)
template <typename T> Var<T> mse(Var<T> pred, Var<T> target);

/// Fused layer leaky_relu(x w + table[rows] + extra, slope) for x [n,k],
/// w [k,m], table [p,m]. `rows` picks a table row per output row (empty:
/// row 0 everywhere); `extra` is an optional [n,m] addend. slope must be
/// positive; slope 1 gives an affine layer.
template <typename T>
Var<T> dense(Var<T> x, Var<T> w, Var<T> table, std::vector<std::size_t> rows, const Var<T>* extra, T slope);

}  // namespace naf::diffcalc
