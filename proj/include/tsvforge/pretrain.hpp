#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsvforge/data.hpp"
#include "tsvforge/encoder.hpp"
#include "tsvforge/objectives.hpp"
#include "tsvforge/random.hpp"

namespace tsvforge {

struct PretrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t n_iters = 200;
  std::uint64_t seed = 0;
  std::optional<MsmConfig> msm;
  std::size_t max_train_length = 3000;

  void validate() const;
};

/// Two overlapping crops [a1, b1) and [a2, b2) of a length-T window with
/// a1 <= a2 < b1 <= b2; the overlap is [a2, b1).
struct CropWindow {
  std::size_t a1 = 0, b1 = 0, a2 = 0, b2 = 0;
  std::size_t overlap() const { return b1 - a2; }
};

/// Overlap length uniform in [1, T], its position uniform, then the outer
/// ends uniform on either side.
CropWindow sample_crops(std::size_t length, Rng& rng);

/// Adaptive moment estimation with bias correction.
class Adam {
public:
  Adam(double lr, std::span<const Tensor* const> params, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  void step(std::span<Tensor* const> params, std::span<const Tensor* const> grads);
  long steps() const noexcept { return steps_; }

private:
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
  std::vector<Tensor> m_, v_;
};

/// Per-timestep MLP output_dim -> h1 -> h2 -> input_dim with GELU between layers.
struct MsmDecoderParams {
  Tensor w1, b1, w2, b2, w3, b3;

  static MsmDecoderParams initialize(std::size_t in_dim, std::size_t hidden1, std::size_t hidden2,
                                     std::size_t out_dim, std::uint64_t seed);
  std::vector<std::pair<std::string, Tensor*>> named();
};

struct StepResult {
  double loss = 0.0;
  double contrastive = 0.0;
  double msm = 0.0;
  double lambda = 0.0;
};

/// Owns the encoder weights, optimizer state and sampling stream of one run.
class Pretrainer {
public:
  Pretrainer(EncoderConfig encoder, PretrainConfig config, EncoderParams initial);

  /// One optimizer step on batch [B x D x T]: crop two views, encode each with
  /// its own timestamp mask, hierarchical loss on the overlap (combined with the
  /// masked reconstruction loss when MSM is on). Throws DivergenceError on a
  /// non-finite loss, leaving the weights untouched.
  StepResult train_step(const Tensor& batch);

  const EncoderParams& params() const noexcept { return params_; }
  const EncoderConfig& encoder_config() const noexcept { return encoder_; }
  long steps_taken() const noexcept { return step_; }

private:
  EncoderConfig encoder_;
  PretrainConfig config_;
  EncoderParams params_;
  std::optional<MsmDecoderParams> decoder_;
  Rng rng_;
  std::optional<Adam> optimizer_;
  long step_ = 0;

  std::vector<Tensor*> trainable();
};

/// B windows of length `window` at uniformly drawn offsets (with replacement)
/// from series [D x T] -> [B x D x window].
Tensor sample_windows(const Tensor& series, std::size_t batch, std::size_t window, Rng& rng);

struct TrainingLogEntry {
  long step = 0;
  double loss = 0.0;
  double lambda = 0.0;
};

struct PretrainResult {
  EncoderParams params;
  std::vector<TrainingLogEntry> log;
};

/// Trains on the train split only (rows < train_end) for n_iters steps.
PretrainResult pretrain(const SeriesDataset& dataset, const EncoderConfig& encoder, const PretrainConfig& config);

/// Line-delimited JSON records {"step", "loss", "lambda"}.
void write_training_log(std::ostream& out, std::span<const TrainingLogEntry> log);

} // namespace tsvforge
