#include "dtn/tape.hpp"

namespace dtn {

const Tensor& Var::value() const { return tape->value(*this); }

void Tape::check_owned(Var v) const {
  if (v.tape != this || v.id >= nodes_.size()) {
    throw std::invalid_argument("variable does not belong to this tape");
  }
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NumericError("variable: non-finite leaf value");
  nodes_.push_back(Node{"variable", std::move(value), {}, {}, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant: non-finite leaf value");
  nodes_.push_back(Node{"constant", std::move(value), {}, {}, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(std::string op, Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  if (!value.all_finite()) throw NumericError(op + ": non-finite value in forward pass");
  Node node{std::move(op), std::move(value), {}, std::move(backward), false};
  node.inputs.reserve(inputs.size());
  for (Var in : inputs) {
    check_owned(in);
    node.inputs.push_back(in.id);
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Gradients Tape::backward(Var root) const {
  check_owned(root);
  if (nodes_[root.id].value.size() != 1) {
    throw ShapeError("backward: root must be scalar, got " +
                     shape_string(nodes_[root.id].value.shape()));
  }
  std::vector<Tensor> grads;
  grads.reserve(nodes_.size());
  for (const Node& n : nodes_) grads.emplace_back(n.value.shape(), 0.0);
  grads[root.id].fill(1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t id = root.id + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (!node.requires_grad || !node.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (std::size_t in : node.inputs) {
      in_values.push_back(&nodes_[in].value);
      in_grads.push_back(nodes_[in].requires_grad ? &grads[in] : nullptr);
    }
    node.backward(BackwardArgs{in_values, node.value, grads[id], in_grads});
    for (Tensor* g : in_grads) {
      if (g && !g->all_finite()) throw NumericError(node.op + ": non-finite gradient in backward pass");
    }
  }
  return Gradients(std::move(grads));
}

}  // namespace dtn
