#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ntfa/diff/tensor.hpp"

namespace ntfa::diff {

class Graph;

/// Handle to a node of a Graph.  Cheap to copy; valid while its Graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const { return value().item(); }
  std::size_t id() const { return id_; }
  Graph* graph() const { return graph_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Tape of primitive operations for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so the tape is already a
/// topological order and backward() is a single reverse sweep.  Nodes whose
/// inputs are all constants carry no backward closure.  Every recorded value
/// is checked for NaN/Inf; a non-finite result throws NumericalError.
///
/// A Graph is a single-threaded value: build and consume it on one thread.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Fixed input, no gradient.
  Var constant(Tensor value);
  /// Fixed input that refers to caller-owned storage.  `value` must outlive the graph.
  Var constant_ref(const Tensor& value);
  /// Differentiable leaf.
  Var parameter(Tensor value);

  /// Reverse sweep from a scalar root.  Leaves that do not reach the root get
  /// zero gradient.  Throws ContractError for a non-scalar root.
  void backward(Var root);

  /// Gradient of `v` after backward(); zeros if `v` did not reach the root.
  Tensor grad(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id()).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // --- op-authoring interface ---------------------------------------------

  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);
  const Tensor& value_of(std::size_t id) const;
  /// Upstream gradient of node `id` (valid inside a backward closure).
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
  /// Zero-initialised gradient accumulator of node `id`.
  std::span<double> grad_buffer(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Tensor value;
    const Tensor* borrowed = nullptr;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph_->value_of(id_); }

}  // namespace ntfa::diff
