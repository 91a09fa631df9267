#include "bla/diffcore/tape.hpp"

#include <algorithm>

#include "bla/error.hpp"

namespace bla {

const Tensor& Var::value() const { return tape_->value(id_); }

const Tensor& Var::grad() const { return tape_->grad_or_zero(id_); }

Var Tape::push(Node node) {
  if (!node.value.all_finite()) {
    throw ContractError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return push(std::move(node));
}

Var Tape::input(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = true;
  return push(std::move(node));
}

Var Tape::param(Param& param) {
  Node node;
  node.value = param.value;
  node.needs_grad = true;
  node.param = &param;
  if (param.grad.shape() != param.value.shape()) param.zero_grad();
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = backward && std::any_of(inputs.begin(), inputs.end(),
                                            [this](std::size_t i) { return nodes_.at(i).needs_grad; });
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  return node.grad;
}

const Tensor& Tape::grad_or_zero(std::size_t id) { return grad(id); }

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ContractError("loss variable belongs to a different tape");
  if (value(loss.id()).size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(value(loss.id()).shape()));
  }
  for (Node& node : nodes_) {
    node.grad = Tensor(node.value.shape());
    node.has_grad = true;
  }
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (!node.needs_grad) continue;
    if (node.backward) node.backward(*this, id);
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr) continue;
    auto dst = node.param->grad.data();
    auto src = node.grad.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
}

}  // namespace bla
