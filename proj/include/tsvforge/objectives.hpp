#pragma once

#include <cstddef>
#include <vector>

#include "tsvforge/autodiff.hpp"
#include "tsvforge/tensor.hpp"

namespace tsvforge {

/// Representations of the two augmented views on their overlap, both laid
/// out [B x T_overlap x C].
struct ViewPair {
  Tensor r;
  Tensor r_prime;

  void validate() const;
  std::size_t batch() const { return r.dim(0); }
  std::size_t length() const { return r.dim(1); }
  std::size_t channels() const { return r.dim(2); }
};

/// Similarities are clamped to [-kDotClamp, kDotClamp] before exponentiation.
/// The clamp passes gradient inside the interval and blocks it outside.
inline constexpr double kDotClamp = 50.0;

/// Mean over (i, t) of -log softmax of the positive pair r_{i,t}.r'_{i,t}
/// against all r'_{i,t'} and r_{i,t'} (t' != t) in the same instance.
double temporal_loss(const ViewPair& pair);

/// Mean over (i, t) of -log softmax of r_{i,t}.r'_{i,t} against r'_{j,t}
/// and r_{j,t} (j != i) across the batch.
double instance_loss(const ViewPair& pair);

double dual_loss(const ViewPair& pair);

/// Dual loss at successively max-pooled (width 2) resolutions while T > 1,
/// instance loss only at T == 1, averaged over the number of levels.
double hierarchical_loss(const ViewPair& pair);

/// Number of resolutions visited by hierarchical_loss for an overlap of T.
std::size_t hierarchy_levels(std::size_t length);

/// Mean squared error over the masked columns of [D x T] tensors. An empty
/// mask yields 0.
double msm_loss(const Tensor& original, const Tensor& reconstruction, const std::vector<bool>& mask);

/// (1 - lambda) * contrastive + lambda * msm, lambda in [0, 1].
double combined_loss(double contrastive, double msm, double lambda);

struct MsmConfig {
  double lambda_max = 0.5;
  double warmup_fraction = 0.5;
  std::size_t decoder_hidden1 = 128;
  std::size_t decoder_hidden2 = 64;

  void validate() const;
};

/// Linear ramp from 0 at iter 0 to lambda_max at warmup_fraction * total_iters,
/// flat afterwards.
double lambda_schedule(long iter, long total_iters, const MsmConfig& cfg);

namespace ad {

Var temporal_loss(Tape& tape, Var r, Var r_prime);
Var instance_loss(Tape& tape, Var r, Var r_prime);
Var dual_loss(Tape& tape, Var r, Var r_prime);
Var hierarchical_loss(Tape& tape, Var r, Var r_prime);
Var msm_loss(Tape& tape, const Tensor& original, Var reconstruction, const std::vector<bool>& mask);
Var combined_loss(Tape& tape, Var contrastive, Var msm, double lambda);

} // namespace ad

} // namespace tsvforge
