#include "tsvforge/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "tsvforge/error.hpp"
#include "tsvforge/ops.hpp"

namespace tsvforge {

namespace {

using Eigen::Index;
using StridedRows = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;
using StridedRowsMut = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;

// One contrastive group: n anchors a_k with positives ap_k; the negatives of
// anchor k are ap_j and a_j for j != k. Returns the summed loss over anchors
// and, when grad pointers are given, accumulates grad_scale * dLoss into them.
double contrastive_group(const double* a_ptr, const double* ap_ptr, Index n, Index channels, Index stride,
                         double* ga_ptr, double* gap_ptr, double grad_scale) {
  const StridedRows a(a_ptr, n, channels, Eigen::OuterStride<>(stride));
  const StridedRows ap(ap_ptr, n, channels, Eigen::OuterStride<>(stride));
  const RowMatrix cross = a * ap.transpose();
  const RowMatrix self = a * a.transpose();

  const bool want_grad = ga_ptr != nullptr;
  RowMatrix g_cross, g_self;
  if (want_grad) {
    g_cross = RowMatrix::Zero(n, n);
    g_self = RowMatrix::Zero(n, n);
  }

  double total = 0.0;
  for (Index k = 0; k < n; ++k) {
    double peak = -kDotClamp;
    for (Index j = 0; j < n; ++j) {
      peak = std::max(peak, std::clamp(cross(k, j), -kDotClamp, kDotClamp));
      if (j != k) peak = std::max(peak, std::clamp(self(k, j), -kDotClamp, kDotClamp));
    }
    double denom = 0.0;
    for (Index j = 0; j < n; ++j) {
      denom += std::exp(std::clamp(cross(k, j), -kDotClamp, kDotClamp) - peak);
      if (j != k) denom += std::exp(std::clamp(self(k, j), -kDotClamp, kDotClamp) - peak);
    }
    const double log_denom = peak + std::log(denom);
    total += log_denom - std::clamp(cross(k, k), -kDotClamp, kDotClamp);

    if (!want_grad) continue;
    for (Index j = 0; j < n; ++j) {
      const double c = cross(k, j);
      if (std::abs(c) <= kDotClamp) {
        const double p = std::exp(c - log_denom);
        g_cross(k, j) = grad_scale * (p - (j == k ? 1.0 : 0.0));
      }
      if (j == k) continue;
      const double s = self(k, j);
      if (std::abs(s) <= kDotClamp) g_self(k, j) = grad_scale * std::exp(s - log_denom);
    }
  }

  if (want_grad) {
    StridedRowsMut ga(ga_ptr, n, channels, Eigen::OuterStride<>(stride));
    StridedRowsMut gap(gap_ptr, n, channels, Eigen::OuterStride<>(stride));
    ga.noalias() += g_cross * ap;
    ga.noalias() += (g_self + g_self.transpose()) * a;
    gap.noalias() += g_cross.transpose() * a;
  }
  return total;
}

enum class Contrast { temporal, instance };

// Mean loss over (i, t); gradients (optional) are accumulated into g / g_prime.
double contrastive_loss(const ViewPair& pair, Contrast kind, Tensor* g, Tensor* g_prime, double upstream) {
  pair.validate();
  const Index batch = static_cast<Index>(pair.batch());
  const Index length = static_cast<Index>(pair.length());
  const Index channels = static_cast<Index>(pair.channels());
  const double norm = 1.0 / static_cast<double>(batch * length);
  const double* r = pair.r.data().data();
  const double* rp = pair.r_prime.data().data();
  double* gr = g ? g->data().data() : nullptr;
  double* grp = g_prime ? g_prime->data().data() : nullptr;
  const double scale = upstream * norm;

  double total = 0.0;
  if (kind == Contrast::temporal) {
    for (Index i = 0; i < batch; ++i) {
      const Index off = i * length * channels;
      total += contrastive_group(r + off, rp + off, length, channels, channels, gr ? gr + off : nullptr,
                                 grp ? grp + off : nullptr, scale);
    }
  } else {
    for (Index t = 0; t < length; ++t) {
      const Index off = t * channels;
      total += contrastive_group(r + off, rp + off, batch, channels, length * channels,
                                 gr ? gr + off : nullptr, grp ? grp + off : nullptr, scale);
    }
  }
  return total * norm;
}

Var record_contrastive(Tape& tape, Var r, Var r_prime, Contrast kind) {
  const ViewPair pair{tape.value(r), tape.value(r_prime)};
  const double value = contrastive_loss(pair, kind, nullptr, nullptr, 1.0);
  const Tape* tp = &tape;
  return tape.record(Tensor::scalar(value), {r, r_prime},
                     [tp, r, r_prime, kind](const Tensor& g, std::span<Tensor* const> d) {
                       const ViewPair pair{tp->value(r), tp->value(r_prime)};
                       Tensor gr(pair.r.shape()), grp(pair.r.shape());
                       contrastive_loss(pair, kind, &gr, &grp, g[0]);
                       if (d[0]) *d[0] += gr;
                       if (d[1]) *d[1] += grp;
                     });
}

void check_msm_shapes(const Tensor& original, const Tensor& reconstruction, const std::vector<bool>& mask) {
  if (original.rank() != 2 || original.shape() != reconstruction.shape())
    throw DimensionError("msm_loss: original " + to_string(original.shape()) + " vs reconstruction " +
                         to_string(reconstruction.shape()));
  if (mask.size() != original.dim(1))
    throw DimensionError("msm_loss: mask length " + std::to_string(mask.size()) + " vs T=" +
                         std::to_string(original.dim(1)));
}

} // namespace

void ViewPair::validate() const {
  if (r.rank() != 3 || r.shape() != r_prime.shape())
    throw DimensionError("view pair needs equal [B x T x C] tensors, got " + to_string(r.shape()) + " and " +
                         to_string(r_prime.shape()));
  if (r.dim(0) < 1 || r.dim(1) < 1) throw ContractViolation("view pair needs B >= 1 and T_overlap >= 1");
}

double temporal_loss(const ViewPair& pair) {
  return contrastive_loss(pair, Contrast::temporal, nullptr, nullptr, 1.0);
}

double instance_loss(const ViewPair& pair) {
  return contrastive_loss(pair, Contrast::instance, nullptr, nullptr, 1.0);
}

double dual_loss(const ViewPair& pair) { return temporal_loss(pair) + instance_loss(pair); }

std::size_t hierarchy_levels(std::size_t length) {
  if (length < 1) throw ContractViolation("hierarchy needs T >= 1");
  std::size_t levels = 1;
  while (length > 1) {
    length = (length + 1) / 2;
    ++levels;
  }
  return levels;
}

double hierarchical_loss(const ViewPair& pair) {
  pair.validate();
  ViewPair level = pair;
  double total = 0.0;
  std::size_t levels = 0;
  while (level.length() > 1) {
    total += dual_loss(level);
    level.r = ops::maxpool_axis(level.r, 1, 2).values;
    level.r_prime = ops::maxpool_axis(level.r_prime, 1, 2).values;
    ++levels;
  }
  total += instance_loss(level);
  ++levels;
  return total / static_cast<double>(levels);
}

double msm_loss(const Tensor& original, const Tensor& reconstruction, const std::vector<bool>& mask) {
  check_msm_shapes(original, reconstruction, mask);
  const std::size_t rows = original.dim(0), cols = original.dim(1);
  const auto masked = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (masked == 0 || rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t d = 0; d < rows; ++d)
    for (std::size_t t = 0; t < cols; ++t)
      if (mask[t]) {
        const double e = reconstruction(d, t) - original(d, t);
        total += e * e;
      }
  return total / static_cast<double>(rows * masked);
}

double combined_loss(double contrastive, double msm, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("combined_loss: lambda must lie in [0, 1]");
  return (1.0 - lambda) * contrastive + lambda * msm;
}

void MsmConfig::validate() const {
  if (!(lambda_max >= 0.0 && lambda_max <= 1.0)) throw ConfigError("msm lambda_max must lie in [0, 1]");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
    throw ConfigError("msm warmup_fraction must lie in [0, 1]");
  if (decoder_hidden1 < 1 || decoder_hidden2 < 1) throw ConfigError("msm decoder widths must be >= 1");
}

double lambda_schedule(long iter, long total_iters, const MsmConfig& cfg) {
  if (iter < 0 || iter > total_iters) throw ContractViolation("lambda_schedule: iter outside [0, total_iters]");
  const double warmup_end = cfg.warmup_fraction * static_cast<double>(total_iters);
  if (static_cast<double>(iter) >= warmup_end) return cfg.lambda_max;
  return cfg.lambda_max * static_cast<double>(iter) / warmup_end;
}

namespace ad {

Var temporal_loss(Tape& tape, Var r, Var r_prime) { return record_contrastive(tape, r, r_prime, Contrast::temporal); }

Var instance_loss(Tape& tape, Var r, Var r_prime) { return record_contrastive(tape, r, r_prime, Contrast::instance); }

Var dual_loss(Tape& tape, Var r, Var r_prime) {
  return add(tape, temporal_loss(tape, r, r_prime), instance_loss(tape, r, r_prime));
}

Var hierarchical_loss(Tape& tape, Var r, Var r_prime) {
  ViewPair{tape.value(r), tape.value(r_prime)}.validate();
  std::vector<Var> terms;
  while (tape.value(r).dim(1) > 1) {
    terms.push_back(dual_loss(tape, r, r_prime));
    r = maxpool_axis(tape, r, 1, 2);
    r_prime = maxpool_axis(tape, r_prime, 1, 2);
  }
  terms.push_back(instance_loss(tape, r, r_prime));
  Var total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) total = add(tape, total, terms[i]);
  return scale(tape, total, 1.0 / static_cast<double>(terms.size()));
}

Var msm_loss(Tape& tape, const Tensor& original, Var reconstruction, const std::vector<bool>& mask) {
  const Tensor& recon = tape.value(reconstruction);
  check_msm_shapes(original, recon, mask);
  const double value = tsvforge::msm_loss(original, recon, mask);
  const auto masked = static_cast<double>(std::count(mask.begin(), mask.end(), true));
  const double norm = masked > 0 ? 1.0 / (masked * static_cast<double>(original.dim(0))) : 0.0;
  const Tape* tp = &tape;
  return tape.record(Tensor::scalar(value), {reconstruction},
                     [tp, reconstruction, original, mask, norm](const Tensor& g, std::span<Tensor* const> d) {
                       const Tensor& recon = tp->value(reconstruction);
                       const std::size_t rows = recon.dim(0), cols = recon.dim(1);
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t t = 0; t < cols; ++t)
                           if (mask[t]) (*d[0])(r, t) += g[0] * 2.0 * norm * (recon(r, t) - original(r, t));
                     });
}

Var combined_loss(Tape& tape, Var contrastive, Var msm, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ContractViolation("combined_loss: lambda must lie in [0, 1]");
  return add(tape, scale(tape, contrastive, 1.0 - lambda), scale(tape, msm, lambda));
}

} // namespace ad

} // namespace tsvforge
