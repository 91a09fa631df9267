#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "bla/diffcore/tensor.hpp"

namespace bla {

/// A trainable tensor and its accumulated gradient.
struct Param {
  Tensor value;
  Tensor grad;

  Param() = default;
  explicit Param(Tensor v) : value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  /// Gradient of the last backward() loss w.r.t. this node (zeros if unreached).
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Define-by-run reverse-mode tape. Nodes are appended in evaluation order, so
/// node ids are already a topological order. A tape is single-threaded; build
/// a fresh one per forward pass.
class Tape {
 public:
  /// Propagates the gradient of node `self` into its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Leaf whose gradient is kept after backward (inputs for saliency, test probes).
  Var input(Tensor value);
  /// Leaf bound to a Param; backward() adds the node gradient into `param.grad`.
  Var param(Param& param);

  /// Records an op output. `backward` may be empty for non-differentiable ops.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. `loss` must be a
  /// single-element tensor.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  /// Mutable gradient buffer, zero-initialised on first access.
  Tensor& grad(std::size_t id);
  const Tensor& grad_or_zero(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Param* param = nullptr;
    bool needs_grad = false;
    bool has_grad = false;
  };

  Var push(Node node);

  std::deque<Node> nodes_;  // deque keeps value references stable across pushes
};

}  // namespace bla
