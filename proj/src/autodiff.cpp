#include "tsvforge/autodiff.hpp"

#include "tsvforge/error.hpp"
#include "tsvforge/ops.hpp"

namespace tsvforge {

const Tensor& Gradients::operator[](Var param) const {
  const auto it = grads_.find(param.id);
  if (it == grads_.end()) throw LookupError("no gradient recorded for node " + std::to_string(param.id));
  return it->second;
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, true});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, false});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (Var in : inputs) {
    if (in.id >= nodes_.size()) throw ContractViolation("tape input refers to a future node");
    needs = needs || nodes_[in.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs), needs ? std::move(backward) : BackwardFn{}, needs, false});
  return Var{nodes_.size() - 1};
}

Gradients Tape::backward(Var loss) const {
  if (loss.id >= nodes_.size()) throw ContractViolation("loss is not a node of this tape");
  if (nodes_[loss.id].value.size() != 1)
    throw ContractViolation("backward needs a scalar loss, got " + to_string(nodes_[loss.id].value.shape()));

  std::vector<Tensor> grads(loss.id + 1);
  grads[loss.id] = Tensor(nodes_[loss.id].value.shape(), 1.0);

  std::vector<Tensor*> slots;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& node = nodes_[i];
    if (!node.requires_grad || node.is_parameter || grads[i].empty()) continue;
    slots.assign(node.inputs.size(), nullptr);
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const std::size_t in = node.inputs[k].id;
      if (!nodes_[in].requires_grad) continue;
      if (grads[in].empty()) grads[in] = Tensor(nodes_[in].value.shape());
      slots[k] = &grads[in];
    }
    node.backward(grads[i], slots);
    grads[i] = Tensor();
  }

  Gradients out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_parameter) continue;
    if (i < grads.size() && !grads[i].empty())
      out.grads_.emplace(i, std::move(grads[i]));
    else
      out.grads_.emplace(i, Tensor(nodes_[i].value.shape()));
  }
  return out;
}

namespace ad {

Var conv1d_dilated(Tape& tape, Var input, Var kernel, int dilation, bool causal_pad) {
  Tensor out = ops::conv1d_dilated(tape.value(input), tape.value(kernel), dilation, causal_pad);
  const Tape* tp = &tape;
  return tape.record(std::move(out), {input, kernel},
                     [tp, input, kernel, dilation, causal_pad](const Tensor& g, std::span<Tensor* const> d) {
                       ops::conv1d_dilated_backward(tp->value(input), tp->value(kernel), g, dilation,
                                                    causal_pad, d[0], d[1]);
                     });
}

Var add_channel_bias(Tape& tape, Var x, Var bias) {
  Tensor out = ops::add_channel_bias(tape.value(x), tape.value(bias));
  return tape.record(std::move(out), {x, bias}, [](const Tensor& g, std::span<Tensor* const> d) {
    if (d[0]) *d[0] += g;
    if (d[1]) {
      const std::size_t cols = g.dim(1);
      for (std::size_t c = 0; c < g.dim(0); ++c)
        for (std::size_t t = 0; t < cols; ++t) (*d[1])[c] += g(c, t);
    }
  });
}

Var linear_time(Tape& tape, Var weight, Var x) {
  Tensor out = ops::linear_time(tape.value(weight), Tensor(), tape.value(x));
  const Tape* tp = &tape;
  return tape.record(std::move(out), {weight, x}, [tp, weight, x](const Tensor& g, std::span<Tensor* const> d) {
    const auto gm = as_matrix(g);
    if (d[0]) as_matrix(*d[0]).noalias() += gm * as_matrix(tp->value(x)).transpose();
    if (d[1]) as_matrix(*d[1]).noalias() += as_matrix(tp->value(weight)).transpose() * gm;
  });
}

Var linear_time(Tape& tape, Var weight, Var bias, Var x) {
  return add_channel_bias(tape, linear_time(tape, weight, x), bias);
}

Var gelu(Tape& tape, Var x) {
  const Tape* tp = &tape;
  return tape.record(ops::gelu(tape.value(x)), {x}, [tp, x](const Tensor& g, std::span<Tensor* const> d) {
    const auto in = tp->value(x).data();
    auto out = d[0]->data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += gd[i] * ops::gelu_derivative(in[i]);
  });
}

Var add(Tape& tape, Var a, Var b) {
  Tensor out = tape.value(a);
  out += tape.value(b);
  return tape.record(std::move(out), {a, b}, [](const Tensor& g, std::span<Tensor* const> d) {
    if (d[0]) *d[0] += g;
    if (d[1]) *d[1] += g;
  });
}

Var scale(Tape& tape, Var x, double factor) {
  Tensor out = tape.value(x);
  for (double& v : out.data()) v *= factor;
  return tape.record(std::move(out), {x}, [factor](const Tensor& g, std::span<Tensor* const> d) {
    auto dst = d[0]->data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
  });
}

Var mask_columns(Tape& tape, Var x, const std::vector<bool>& mask) {
  Tensor out = tape.value(x);
  if (out.rank() != 2 || out.dim(1) != mask.size())
    throw DimensionError("mask of length " + std::to_string(mask.size()) + " does not fit " +
                         to_string(out.shape()));
  const std::size_t rows = out.dim(0), cols = out.dim(1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t t = 0; t < cols; ++t)
      if (mask[t]) out(r, t) = 0.0;
  return tape.record(std::move(out), {x}, [mask, rows, cols](const Tensor& g, std::span<Tensor* const> d) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t t = 0; t < cols; ++t)
        if (!mask[t]) (*d[0])(r, t) += g(r, t);
  });
}

Var slice_time(Tape& tape, Var x, std::size_t begin, std::size_t end) {
  Tensor out = ops::slice_time(tape.value(x), begin, end);
  return tape.record(std::move(out), {x}, [begin, end](const Tensor& g, std::span<Tensor* const> d) {
    as_matrix(*d[0]).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) +=
        as_matrix(g);
  });
}

Var stack_btc(Tape& tape, std::span<const Var> items) {
  if (items.empty()) throw ContractViolation("stack_btc needs at least one tensor");
  const Tensor& first = tape.value(items[0]);
  if (first.rank() != 2) throw DimensionError("stack_btc expects [C x T] items");
  const std::size_t channels = first.dim(0), length = first.dim(1);
  Tensor out({items.size(), length, channels});
  for (std::size_t b = 0; b < items.size(); ++b) {
    const Tensor& item = tape.value(items[b]);
    if (item.shape() != first.shape())
      throw DimensionError("stack_btc items disagree: " + to_string(item.shape()) + " vs " +
                           to_string(first.shape()));
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t t = 0; t < length; ++t) out(b, t, c) = item(c, t);
  }
  std::vector<Var> inputs(items.begin(), items.end());
  return tape.record(std::move(out), std::move(inputs),
                     [channels, length](const Tensor& g, std::span<Tensor* const> d) {
                       for (std::size_t b = 0; b < d.size(); ++b) {
                         if (!d[b]) continue;
                         for (std::size_t c = 0; c < channels; ++c)
                           for (std::size_t t = 0; t < length; ++t) (*d[b])(c, t) += g(b, t, c);
                       }
                     });
}

Var maxpool_axis(Tape& tape, Var x, std::size_t axis, std::size_t width) {
  ops::PoolResult pooled = ops::maxpool_axis(tape.value(x), axis, width);
  return tape.record(std::move(pooled.values), {x},
                     [argmax = std::move(pooled.argmax)](const Tensor& g, std::span<Tensor* const> d) {
                       auto dst = d[0]->data();
                       const auto src = g.data();
                       for (std::size_t i = 0; i < argmax.size(); ++i) dst[argmax[i]] += src[i];
                     });
}

Var sum(Tape& tape, Var x) {
  double total = 0.0;
  for (double v : tape.value(x).data()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [](const Tensor& g, std::span<Tensor* const> d) {
    const double s = g[0];
    for (double& v : d[0]->data()) v += s;
  });
}

Var dot(Tape& tape, Var a, Var b) {
  const Tensor& av = tape.value(a);
  const Tensor& bv = tape.value(b);
  if (av.shape() != bv.shape())
    throw DimensionError("dot of " + to_string(av.shape()) + " and " + to_string(bv.shape()));
  double total = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * bv[i];
  const Tape* tp = &tape;
  return tape.record(Tensor::scalar(total), {a, b}, [tp, a, b](const Tensor& g, std::span<Tensor* const> d) {
    const double s = g[0];
    const Tensor& av = tp->value(a);
    const Tensor& bv = tp->value(b);
    if (d[0])
      for (std::size_t i = 0; i < av.size(); ++i) (*d[0])[i] += s * bv[i];
    if (d[1])
      for (std::size_t i = 0; i < bv.size(); ++i) (*d[1])[i] += s * av[i];
  });
}

} // namespace ad

} // namespace tsvforge
