#include "ntfa/diff/graph.hpp"

#include <string>

#include "ntfa/error.hpp"

namespace ntfa::diff {

Var Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Graph::constant_ref(const Tensor& value) {
  Node node;
  node.borrowed = &value;
  return push(std::move(node));
}

Var Graph::parameter(Tensor value) {
  if (!value.all_finite()) throw NumericalError("graph: non-finite parameter value");
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return push(std::move(node));
}

const Tensor& Graph::value_of(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.borrowed != nullptr ? *n.borrowed : n.value;
}

Var Graph::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  if (!value.all_finite()) {
    throw NumericalError("graph: operation " + std::to_string(nodes_.size()) +
                         " produced a non-finite value");
  }
  Node node;
  node.value = std::move(value);
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw ContractError("graph: input refers to a future node");
    node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  }
  if (node.requires_grad) {
    node.inputs = std::move(inputs);
    node.backward = std::move(backward);
  }
  return push(std::move(node));
}

std::span<double> Graph::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && value_of(id).size() > 0) n.grad = Tensor(value_of(id).shape(), 0.0);
  return n.grad.values();
}

void Graph::backward(Var root) {
  if (root.graph() != this) throw ContractError("backward: root belongs to another graph");
  if (root.value().size() != 1) {
    throw ContractError("backward: root must be scalar, got shape " +
                        shape_string(root.value().shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  if (!nodes_[root.id()].requires_grad) return;
  grad_buffer(root.id())[0] = 1.0;
  for (std::size_t i = root.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, i);
  }
}

Tensor Graph::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor(value_of(v.id()).shape(), 0.0);
  return n.grad;
}

}  // namespace ntfa::diff
