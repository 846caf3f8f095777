#include "tsvforge/ops.hpp"

#include <cmath>
#include <numbers>

#include "tsvforge/error.hpp"

namespace tsvforge::ops {

namespace {

using Eigen::Index;

struct ConvGeometry {
  Index c_in, c_out, width, length, left_pad, total_pad;
};

ConvGeometry conv_geometry(const Tensor& input, const Tensor& kernel, int dilation,
                           bool causal_pad) {
  if (input.rank() != 2) throw DimensionError("conv1d input must be [C_in x T], got " + to_string(input.shape()));
  if (kernel.rank() != 3)
    throw DimensionError("conv1d kernel must be [C_out x C_in x K], got " + to_string(kernel.shape()));
  if (kernel.dim(1) != input.dim(0))
    throw DimensionError("conv1d kernel expects " + std::to_string(kernel.dim(1)) +
                         " input channels, input has " + std::to_string(input.dim(0)));
  if (dilation < 1) throw ContractViolation("conv1d dilation must be >= 1");
  const auto width = static_cast<Index>(kernel.dim(2));
  if (width < 1) throw DimensionError("conv1d kernel width must be >= 1");
  if (!causal_pad && width % 2 == 0) throw ContractViolation("centred conv1d needs an odd kernel width");
  const Index total = (width - 1) * dilation;
  return {static_cast<Index>(input.dim(0)), static_cast<Index>(kernel.dim(0)), width,
          static_cast<Index>(input.dim(1)), causal_pad ? total : total / 2, total};
}

// kernel tap k as a dense [C_out x C_in] matrix
RowMatrix kernel_tap(const Tensor& kernel, Index k) {
  const Index c_out = static_cast<Index>(kernel.dim(0));
  const Index c_in = static_cast<Index>(kernel.dim(1));
  const Index width = static_cast<Index>(kernel.dim(2));
  RowMatrix tap(c_out, c_in);
  const double* src = kernel.data().data();
  for (Index o = 0; o < c_out; ++o)
    for (Index i = 0; i < c_in; ++i) tap(o, i) = src[(o * c_in + i) * width + k];
  return tap;
}

RowMatrix padded_input(const Tensor& input, const ConvGeometry& g) {
  RowMatrix padded = RowMatrix::Zero(g.c_in, g.length + g.total_pad);
  padded.middleCols(g.left_pad, g.length) = as_matrix(input);
  return padded;
}

} // namespace

Tensor conv1d_dilated(const Tensor& input, const Tensor& kernel, int dilation, bool causal_pad) {
  const ConvGeometry g = conv_geometry(input, kernel, dilation, causal_pad);
  const RowMatrix padded = padded_input(input, g);
  Tensor out({static_cast<std::size_t>(g.c_out), static_cast<std::size_t>(g.length)});
  auto y = as_matrix(out);
  for (Index k = 0; k < g.width; ++k)
    y.noalias() += kernel_tap(kernel, k) * padded.middleCols(k * dilation, g.length);
  return out;
}

void conv1d_dilated_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out,
                             int dilation, bool causal_pad, Tensor* grad_input,
                             Tensor* grad_kernel) {
  const ConvGeometry g = conv_geometry(input, kernel, dilation, causal_pad);
  const auto dy = as_matrix(grad_out);
  const RowMatrix padded = padded_input(input, g);
  RowMatrix dpadded;
  if (grad_input) dpadded = RowMatrix::Zero(g.c_in, g.length + g.total_pad);

  double* dk = grad_kernel ? grad_kernel->data().data() : nullptr;
  for (Index k = 0; k < g.width; ++k) {
    const auto window = padded.middleCols(k * dilation, g.length);
    if (grad_input) dpadded.middleCols(k * dilation, g.length).noalias() += kernel_tap(kernel, k).transpose() * dy;
    if (dk) {
      const RowMatrix dtap = dy * window.transpose();
      for (Index o = 0; o < g.c_out; ++o)
        for (Index i = 0; i < g.c_in; ++i) dk[(o * g.c_in + i) * g.width + k] += dtap(o, i);
    }
  }
  if (grad_input) as_matrix(*grad_input) += dpadded.middleCols(g.left_pad, g.length);
}

PoolResult maxpool_axis(const Tensor& input, std::size_t axis, std::size_t width) {
  if (width < 1) throw ContractViolation("pool width must be >= 1");
  const std::size_t length = input.dim(axis);
  if (length < 1) throw ContractViolation("cannot pool an empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= input.dim(a);
  for (std::size_t a = axis + 1; a < input.rank(); ++a) inner *= input.dim(a);

  const std::size_t pooled = (length + width - 1) / width;
  Shape shape = input.shape();
  shape[axis] = pooled;
  PoolResult result{Tensor(shape), std::vector<std::size_t>(outer * pooled * inner)};

  const auto src = input.data();
  auto dst = result.values.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t p = 0; p < pooled; ++p)
      for (std::size_t c = 0; c < inner; ++c) {
        std::size_t best = (o * length + p * width) * inner + c;
        const std::size_t stop = std::min(length, (p + 1) * width);
        for (std::size_t t = p * width + 1; t < stop; ++t) {
          const std::size_t idx = (o * length + t) * inner + c;
          if (src[idx] > src[best]) best = idx;
        }
        const std::size_t out = (o * pooled + p) * inner + c;
        dst[out] = src[best];
        result.argmax[out] = best;
      }
  return result;
}

Tensor maxpool1d_time(const Tensor& input, std::size_t width) {
  if (input.rank() != 2) throw DimensionError("maxpool1d_time expects [C x T], got " + to_string(input.shape()));
  return maxpool_axis(input, 1, width).values;
}

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = gelu(v);
  return out;
}

Tensor linear_time(const Tensor& weight, const Tensor& bias, const Tensor& x) {
  if (weight.rank() != 2 || x.rank() != 2 || weight.dim(1) != x.dim(0))
    throw DimensionError("linear_time: weight " + to_string(weight.shape()) + " cannot map input " +
                         to_string(x.shape()));
  Tensor out({weight.dim(0), x.dim(1)});
  as_matrix(out).noalias() = as_matrix(weight) * as_matrix(x);
  return bias.empty() ? out : add_channel_bias(out, bias);
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.rank() != 1 || bias.dim(0) != x.dim(0))
    throw DimensionError("bias " + to_string(bias.shape()) + " does not fit " + to_string(x.shape()));
  Tensor out = x;
  const std::size_t cols = x.dim(1);
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t t = 0; t < cols; ++t) out(c, t) += bias[c];
  return out;
}

Tensor slice_time(const Tensor& x, std::size_t begin, std::size_t end) {
  if (x.rank() != 2) throw DimensionError("slice_time expects [C x T]");
  if (begin > end || end > x.dim(1))
    throw ContractViolation("time slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                            ") outside length " + std::to_string(x.dim(1)));
  Tensor out({x.dim(0), end - begin});
  as_matrix(out) = as_matrix(x).middleCols(static_cast<Eigen::Index>(begin),
                                           static_cast<Eigen::Index>(end - begin));
  return out;
}

} // namespace tsvforge::ops
