#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tsvforge/tensor.hpp"

namespace tsvforge {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
  friend bool operator==(Var, Var) = default;
};

/// Per-parameter gradients returned by Tape::backward.
class Gradients {
public:
  const Tensor& operator[](Var param) const;
  bool contains(Var param) const { return grads_.contains(param.id); }
  std::size_t size() const { return grads_.size(); }

private:
  friend class Tape;
  std::unordered_map<std::size_t, Tensor> grads_;
};

/// Records primitive ops in execution order (which is a topological order by
/// construction) and replays them in reverse. One tape per training step; not
/// shared across threads.
class Tape {
public:
  /// Receives dL/d(output) and accumulates into dL/d(input_k). Entries of
  /// `grad_inputs` are null for inputs that need no gradient.
  using BackwardFn = std::function<void(const Tensor& grad_out, std::span<Tensor* const> grad_inputs)>;

  Var parameter(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// dLoss/dParam for every parameter; unused parameters get zero tensors.
  Gradients backward(Var loss) const;

private:
  struct Node {
    Tensor value;
    std::vector<Var> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_parameter = false;
  };
  std::vector<Node> nodes_;
};

// Recorded primitives. Each mirrors a forward kernel in ops.hpp.
namespace ad {

Var conv1d_dilated(Tape& tape, Var input, Var kernel, int dilation, bool causal_pad);
Var add_channel_bias(Tape& tape, Var x, Var bias);
Var linear_time(Tape& tape, Var weight, Var bias, Var x);
Var linear_time(Tape& tape, Var weight, Var x);
Var gelu(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double factor);
/// Zeroes the columns t of x [C x T] where mask[t] is true.
Var mask_columns(Tape& tape, Var x, const std::vector<bool>& mask);
Var slice_time(Tape& tape, Var x, std::size_t begin, std::size_t end);
/// B tensors of shape [C x T] -> one [B x T x C] tensor.
Var stack_btc(Tape& tape, std::span<const Var> items);
Var maxpool_axis(Tape& tape, Var x, std::size_t axis, std::size_t width);
Var sum(Tape& tape, Var x);
Var dot(Tape& tape, Var a, Var b);

} // namespace ad

} // namespace tsvforge
