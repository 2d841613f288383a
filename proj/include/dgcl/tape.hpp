#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "dgcl/tensor.hpp"

namespace dgcl::nd {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid for the
// lifetime of the tape that produced it.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool tracked() const;
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Append-only record of a computation. Nodes are appended after their inputs,
// so reverse insertion order is a valid reverse topological order.
//
// A tape is built for one step and thrown away; it is not thread-safe.
class Tape {
 public:
  // Receives the gradient of the loss w.r.t. this node's output and
  // accumulates into the node's inputs via grad_buffer().
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Tracked leaf; its gradient is reported by gradient().
  Var leaf(Tensor value);
  // Untracked input; never receives a gradient.
  Var constant(Tensor value);
  // Result of an op. Tracked iff any of `inputs` is tracked; `fn` is dropped
  // for untracked results.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Zero-initialised accumulation buffer for node `id`, or nullptr when the
  // node is untracked.
  Tensor* grad_buffer(std::size_t id);

  // Reverse sweep from a one-element tracked loss.
  void backward(const Var& loss);

  // Gradient of the last backward() loss w.r.t. `v`. Absent for untracked
  // values; zero for tracked values the loss does not depend on.
  std::optional<Tensor> gradient(const Var& v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_owner(const Var& v) const;

  // deque: value() references stay valid while the tape grows.
  std::deque<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> has_grad_;
  bool backward_done_ = false;
};

}  // namespace dgcl::nd
