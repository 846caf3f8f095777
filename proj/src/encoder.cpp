#include "tsvforge/encoder.hpp"

#include <cmath>

#include "tsvforge/error.hpp"
#include "tsvforge/ops.hpp"
#include "tsvforge/random.hpp"

namespace tsvforge {

namespace {

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = uniform(rng, -bound, bound);
  return t;
}

} // namespace

void EncoderConfig::validate() const {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) throw ConfigError("encoder dims must be >= 1");
  if (depth < 1) throw ConfigError("encoder depth must be >= 1");
  if (depth > 30) throw ConfigError("encoder depth above 30 overflows the dilation schedule");
  if (kernel_width < 1) throw ConfigError("encoder kernel width must be >= 1");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw ConfigError("mask_prob must lie in [0, 1]");
}

EncoderParams EncoderParams::initialize(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0xE1));
  const std::size_t h = config.hidden_dim, k = config.kernel_width;
  EncoderParams p;
  const double proj_bound = 1.0 / std::sqrt(static_cast<double>(config.input_dim));
  p.proj_weight = uniform_tensor({h, config.input_dim}, proj_bound, rng);
  p.proj_bias = uniform_tensor({h}, proj_bound, rng);
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(h * k));
  for (std::size_t i = 0; i < config.depth; ++i) {
    ResidualBlockParams b;
    b.conv1_kernel = uniform_tensor({h, h, k}, conv_bound, rng);
    b.conv1_bias = uniform_tensor({h}, conv_bound, rng);
    b.conv2_kernel = uniform_tensor({h, h, k}, conv_bound, rng);
    b.conv2_bias = uniform_tensor({h}, conv_bound, rng);
    p.blocks.push_back(std::move(b));
  }
  p.head_kernel = uniform_tensor({config.output_dim, h, 1}, 1.0 / std::sqrt(static_cast<double>(h)), rng);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> EncoderParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out{{"proj.weight", &proj_weight}, {"proj.bias", &proj_bias}};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "blocks." + std::to_string(i) + ".";
    out.emplace_back(prefix + "conv1.kernel", &blocks[i].conv1_kernel);
    out.emplace_back(prefix + "conv1.bias", &blocks[i].conv1_bias);
    out.emplace_back(prefix + "conv2.kernel", &blocks[i].conv2_kernel);
    out.emplace_back(prefix + "conv2.bias", &blocks[i].conv2_bias);
  }
  out.emplace_back("head.kernel", &head_kernel);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> EncoderParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : const_cast<EncoderParams*>(this)->named()) out.emplace_back(name, t);
  return out;
}

bool EncoderParams::all_finite() const {
  for (const auto& [name, t] : named())
    if (!t->all_finite()) return false;
  return true;
}

std::size_t receptive_field(const EncoderConfig& config) {
  std::size_t field = 1;
  for (std::size_t i = 0; i < config.depth; ++i)
    field += 2 * (config.kernel_width - 1) * static_cast<std::size_t>(block_dilation(i));
  return field;
}

Tensor project_input(const Tensor& x, const EncoderParams& params) {
  if (x.rank() != 2 || x.dim(0) != params.proj_weight.dim(1))
    throw DimensionError("encoder expects input [" + std::to_string(params.proj_weight.dim(1)) +
                         " x T], got " + to_string(x.shape()));
  return ops::linear_time(params.proj_weight, params.proj_bias, x);
}

std::vector<bool> draw_timestamp_mask(std::size_t length, double mask_prob, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x3A));
  std::vector<bool> mask(length);
  for (std::size_t t = 0; t < length; ++t) mask[t] = uniform01(rng) < mask_prob;
  return mask;
}

MaskedLatent mask_timestamps(const Tensor& latent, double mask_prob, std::uint64_t seed) {
  if (latent.rank() != 2) throw DimensionError("mask_timestamps expects [hidden x T]");
  MaskedLatent out{latent, draw_timestamp_mask(latent.dim(1), mask_prob, seed)};
  for (std::size_t c = 0; c < latent.dim(0); ++c)
    for (std::size_t t = 0; t < latent.dim(1); ++t)
      if (out.mask[t]) out.masked(c, t) = 0.0;
  return out;
}

Tensor encode(const Tensor& x, const EncoderParams& params, const EncoderConfig& config, bool training,
              std::uint64_t seed) {
  config.validate();
  if (x.rank() != 2 || x.dim(1) < 1) throw ContractViolation("encode needs x [D x T] with T >= 1");
  Tensor h = project_input(x, params);
  if (training) h = mask_timestamps(h, config.mask_prob, seed).masked;
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    const auto& b = params.blocks[i];
    const int dilation = block_dilation(i);
    Tensor inner = ops::gelu(ops::add_channel_bias(ops::conv1d_dilated(h, b.conv1_kernel, dilation, true), b.conv1_bias));
    Tensor out = ops::add_channel_bias(ops::conv1d_dilated(inner, b.conv2_kernel, dilation, true), b.conv2_bias);
    out += h;
    h = std::move(out);
  }
  return ops::conv1d_dilated(h, params.head_kernel, 1, true);
}

Tensor encode_causal_padded(const Tensor& x, const EncoderParams& params, const EncoderConfig& config,
                            std::size_t pad) {
  if (x.rank() != 2) throw DimensionError("encode_causal_padded expects [D x T]");
  if (pad == 0) return encode(x, params, config, false);
  Tensor padded({x.dim(0), x.dim(1) + pad});
  as_matrix(padded).rightCols(static_cast<Eigen::Index>(x.dim(1))) = as_matrix(x);
  const Tensor full = encode(padded, params, config, false);
  return ops::slice_time(full, pad, pad + x.dim(1));
}

EncoderVars EncoderVars::record(Tape& tape, const EncoderParams& params) {
  EncoderVars v;
  v.proj_weight = tape.parameter(params.proj_weight);
  v.proj_bias = tape.parameter(params.proj_bias);
  for (const auto& b : params.blocks)
    v.blocks.push_back({tape.parameter(b.conv1_kernel), tape.parameter(b.conv1_bias),
                        tape.parameter(b.conv2_kernel), tape.parameter(b.conv2_bias)});
  v.head_kernel = tape.parameter(params.head_kernel);
  return v;
}

std::vector<Var> EncoderVars::ordered() const {
  std::vector<Var> out{proj_weight, proj_bias};
  for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
  out.push_back(head_kernel);
  return out;
}

Var encode_on_tape(Tape& tape, const EncoderVars& vars, Var x, const std::vector<bool>* mask) {
  Var h = ad::linear_time(tape, vars.proj_weight, vars.proj_bias, x);
  if (mask) h = ad::mask_columns(tape, h, *mask);
  for (std::size_t i = 0; i < vars.blocks.size(); ++i) {
    const auto& b = vars.blocks[i];
    const int dilation = block_dilation(i);
    Var inner = ad::gelu(tape, ad::add_channel_bias(tape, ad::conv1d_dilated(tape, h, b[0], dilation, true), b[1]));
    Var out = ad::add_channel_bias(tape, ad::conv1d_dilated(tape, inner, b[2], dilation, true), b[3]);
    h = ad::add(tape, out, h);
  }
  return ad::conv1d_dilated(tape, h, vars.head_kernel, 1, true);
}

} // namespace tsvforge
