#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsvforge/autodiff.hpp"
#include "tsvforge/tensor.hpp"

namespace tsvforge {

struct EncoderConfig {
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 320;
  std::size_t depth = 10;
  std::size_t kernel_width = 3;
  double mask_prob = 0.5;

  void validate() const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct ResidualBlockParams {
  Tensor conv1_kernel; // [hidden x hidden x K]
  Tensor conv1_bias;   // [hidden]
  Tensor conv2_kernel;
  Tensor conv2_bias;
  friend bool operator==(const ResidualBlockParams&, const ResidualBlockParams&) = default;
};

/// Learnable weights: input projection, `depth` residual blocks of two
/// dilated causal convolutions each, and a bias-free 1x1 output head.
struct EncoderParams {
  Tensor proj_weight; // [hidden x input]
  Tensor proj_bias;   // [hidden]
  std::vector<ResidualBlockParams> blocks;
  Tensor head_kernel; // [output x hidden x 1]

  /// Fan-in scaled uniform init, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static EncoderParams initialize(const EncoderConfig& config, std::uint64_t seed);

  /// Stable parameter order, shared by the optimizer and checkpoints.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;

  bool all_finite() const;
  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Dilation of both convolutions in residual block `index`.
inline int block_dilation(std::size_t index) { return 1 << index; }

/// Number of input steps an output position can see, head and projection included.
std::size_t receptive_field(const EncoderConfig& config);

Tensor project_input(const Tensor& x, const EncoderParams& params);

/// Bernoulli(mask_prob) draw per timestamp, reproducible from the seed.
std::vector<bool> draw_timestamp_mask(std::size_t length, double mask_prob, std::uint64_t seed);

struct MaskedLatent {
  Tensor masked;
  std::vector<bool> mask;
};

/// Zeroes whole latent columns [hidden x T] at randomly drawn timestamps.
MaskedLatent mask_timestamps(const Tensor& latent, double mask_prob, std::uint64_t seed);

/// x [D x T] -> representations [output_dim x T]. Masking only when training.
Tensor encode(const Tensor& x, const EncoderParams& params, const EncoderConfig& config, bool training,
              std::uint64_t seed = 0);

/// Left-pads x with `pad` zero timesteps, encodes without masking and drops the
/// first `pad` output columns.
Tensor encode_causal_padded(const Tensor& x, const EncoderParams& params, const EncoderConfig& config,
                            std::size_t pad = 200);

/// Tape handles for every encoder parameter.
struct EncoderVars {
  Var proj_weight;
  Var proj_bias;
  std::vector<std::array<Var, 4>> blocks; // conv1 kernel, conv1 bias, conv2 kernel, conv2 bias
  Var head_kernel;

  static EncoderVars record(Tape& tape, const EncoderParams& params);
  /// Same order as EncoderParams::named().
  std::vector<Var> ordered() const;
};

/// Differentiable forward pass. `mask`, when given, zeroes latent columns
/// after the projection.
Var encode_on_tape(Tape& tape, const EncoderVars& vars, Var x, const std::vector<bool>* mask = nullptr);

} // namespace tsvforge
