#pragma once

#include <unordered_map>
#include <utility>
#include <vector>

#include "ntfa/diff/graph.hpp"

namespace ntfa::diff {

/// Maps caller-owned parameter tensors onto graph leaves, creating each leaf
/// on first use.  A trainable binding creates differentiable leaves; an inert
/// one creates borrowed constants.
class Binding {
 public:
  Binding(Graph& graph, bool trainable) : graph_(graph), trainable_(trainable) {}

  Var operator()(const Tensor& tensor) {
    if (auto it = index_.find(&tensor); it != index_.end()) return entries_[it->second].second;
    Var v = trainable_ ? graph_.parameter(tensor) : graph_.constant_ref(tensor);
    index_.emplace(&tensor, entries_.size());
    entries_.emplace_back(&tensor, v);
    return v;
  }

  Graph& graph() { return graph_; }
  bool trainable() const { return trainable_; }

  /// Bound tensors in first-use order.
  const std::vector<std::pair<const Tensor*, Var>>& entries() const { return entries_; }

 private:
  Graph& graph_;
  bool trainable_;
  std::unordered_map<const Tensor*, std::size_t> index_;
  std::vector<std::pair<const Tensor*, Var>> entries_;
};

}  // namespace ntfa::diff
