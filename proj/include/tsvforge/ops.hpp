#pragma once

#include <cstddef>
#include <vector>

#include "tsvforge/tensor.hpp"

// Forward kernels and their adjoints. Used directly for inference and wrapped
// by the tape ops in autodiff.hpp for training.
namespace tsvforge::ops {

/// input [C_in x T], kernel [C_out x C_in x K] -> [C_out x T].
/// Causal padding puts (K-1)*dilation zeros on the left, so output t only sees
/// inputs <= t. Otherwise the (odd) kernel is centred with symmetric zero pad.
Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel, int dilation, bool causal_pad);

void conv1d_dilated_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                             int dilation, bool causal_pad, Tensor* grad_input,
                             Tensor* grad_kernel);

struct PoolResult {
  Tensor values;
  std::vector<std::size_t> argmax; // flat input index of each output element
};

/// Non-overlapping max pool along `axis`; the trailing window may be partial.
PoolResult maxpool_axis(const Tensor& input, std::size_t axis, std::size_t width);

/// [C x T] -> [C x ceil(T/width)].
Tensor maxpool1d_time(const Tensor& input, std::size_t width);

double gelu(double x);
double gelu_derivative(double x);
Tensor gelu(const Tensor& x);

/// Per-timestep affine map: weight [H x D], bias [H] (may be empty), x [D x T].
Tensor linear_time(const Tensor& weight, const Tensor& bias, const Tensor& x);

/// Adds bias [C] to every column of x [C x T].
Tensor add_channel_bias(const Tensor& x, const Tensor& bias);

/// Columns [begin, end) of a [C x T] tensor.
Tensor slice_time(const Tensor& x, std::size_t begin, std::size_t end);

} // namespace tsvforge::ops
