#include "dgcl/tape.hpp"

#include "dgcl/error.hpp"

namespace dgcl::nd {

const Tensor& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(id_);
}

bool Var::tracked() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value) {
  nodes_.push_back({std::move(value), true, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), false, nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owner(const Var& v) const {
  if (v.tape() != this) {
    throw ContractError("Var belongs to a different tape (or is unbound)");
  }
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool tracked = false;
  for (const Var& v : inputs) {
    check_owner(v);
    tracked = tracked || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back({std::move(value), tracked, tracked ? std::move(fn) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool tracked = false;
  for (const Var& v : inputs) {
    check_owner(v);
    tracked = tracked || nodes_[v.id()].requires_grad;
  }
  nodes_.push_back({std::move(value), tracked, tracked ? std::move(fn) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(std::size_t id) {
  if (!nodes_[id].requires_grad) return nullptr;
  if (!has_grad_[id]) {
    grads_[id] = Tensor(nodes_[id].value.shape());
    has_grad_[id] = true;
  }
  return &grads_[id];
}

void Tape::backward(const Var& loss) {
  check_owner(loss);
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_str(root.value.shape()));
  }
  if (!root.requires_grad) {
    throw ContractError("backward() on an untracked loss");
  }
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), false);
  grads_[loss.id()] = Tensor(root.value.shape(), 1.0);
  has_grad_[loss.id()] = true;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    if (!has_grad_[i]) continue;  // not reached from the loss
    n.backward(*this, grads_[i]);
  }
  backward_done_ = true;
}

std::optional<Tensor> Tape::gradient(const Var& v) const {
  check_owner(v);
  if (!nodes_[v.id()].requires_grad) return std::nullopt;
  if (!backward_done_) throw ContractError("gradient() before backward()");
  if (v.id() >= has_grad_.size() || !has_grad_[v.id()]) {
    return Tensor(nodes_[v.id()].value.shape());
  }
  return grads_[v.id()];
}

}  // namespace dgcl::nd
