#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tsvforge/checkpoint.hpp"
#include "tsvforge/data.hpp"
#include "tsvforge/encoder.hpp"
#include "tsvforge/features.hpp"
#include "tsvforge/pretrain.hpp"
#include "tsvforge/ridge.hpp"

namespace tsvforge {

struct WeightPair {
  double w1 = 0.9; // dynamics head (representations only)
  double w2 = 0.1; // time-feature head
  friend bool operator==(const WeightPair&, const WeightPair&) = default;
};

class WeightGrid {
public:
  /// w1 = 0.90, 0.85, ..., 0.10 with w2 = 1 - w1.
  static WeightGrid standard();
  explicit WeightGrid(std::vector<WeightPair> candidates);

  std::span<const WeightPair> candidates() const noexcept { return candidates_; }
  std::size_t size() const noexcept { return candidates_.size(); }

private:
  std::vector<WeightPair> candidates_;
};

/// sqrt(MSE) + MAE over all entries.
double val_objective(const Matrix& pred, const Matrix& truth);

/// w1 * a + w2 * b, for pairs with w2 = 1 - w1.
Matrix blend(const Matrix& a, const Matrix& b, WeightPair w);

struct WeightSelection {
  WeightPair weights;
  double score = 0.0;
  std::vector<double> candidate_scores; // one per grid candidate, grid order
};

/// Grid minimizer of val_objective(w1 a + w2 b, truth); ties go to the larger w1.
WeightSelection select_weights(const Matrix& pred_a, const Matrix& pred_b, const Matrix& truth,
                               const WeightGrid& grid);

struct HorizonHeads {
  std::size_t horizon = 0;
  RidgeHead head_a; // representations
  RidgeHead head_b; // representations + daily sin/cos
  WeightPair weights;
  double val_score = 0.0;
};

class EnsembleModel {
public:
  void insert(HorizonHeads heads);
  /// Throws LookupError when no heads were fitted for `horizon`.
  const HorizonHeads& at(std::size_t horizon) const;
  bool contains(std::size_t horizon) const { return by_horizon_.contains(horizon); }
  std::vector<std::size_t> horizons() const;

private:
  std::map<std::size_t, HorizonHeads> by_horizon_;
};

/// Model A on reps [n x rep_dim], Model B on [reps | time] and their weighted
/// sum. `weights` overrides the stored pair.
Matrix ensemble_forecast(const EnsembleModel& model, const Matrix& reps, const Matrix& time, std::size_t horizon,
                         std::optional<WeightPair> weights = std::nullopt);

Checkpoint ensemble_checkpoint(const EnsembleModel& model, nlohmann::json meta = nlohmann::json::object());
EnsembleModel ensemble_from_checkpoint(const Checkpoint& ckpt);

struct PipelineConfig {
  EncoderConfig encoder;
  PretrainConfig pretrain;
  std::vector<double> alpha_grid = default_alpha_grid();
  WeightGrid weight_grid = WeightGrid::standard();
  std::size_t pad = 200;
};

struct HorizonOutcome {
  std::size_t horizon = 0;
  Matrix truth_test;    // [n_test x h*D]
  Matrix forecast_test; // ensemble
  Matrix forecast_a_test;
  Matrix forecast_b_test;
  double mse = 0.0, mae = 0.0;                   // ensemble on test
  double baseline_mse = 0.0, baseline_mae = 0.0; // Model A alone on test
  WeightPair weights;
  double alpha_a = 0.0, alpha_b = 0.0;
  double val_score = 0.0;
  std::vector<double> candidate_val_scores;
};

struct PipelineResult {
  EncoderConfig encoder_config;
  EncoderParams encoder;
  std::vector<TrainingLogEntry> log; // empty when a pretrained encoder was supplied
  EnsembleModel model;
  std::vector<HorizonOutcome> horizons;
};

/// Encoder representations [output_dim x T] of the whole series, causally padded.
Tensor encode_series(const SeriesDataset& ds, const EncoderParams& params, const EncoderConfig& config,
                     std::size_t pad);

/// All phases on a split, normalized dataset: pretrain (unless `pretrained`
/// is given), causal encoding, per-horizon heads with alpha search on the
/// validation split, weight selection, test forecasts. The encoder input
/// width follows the dataset.
PipelineResult run_pipeline(const SeriesDataset& ds, std::span<const std::size_t> horizons,
                            const PipelineConfig& config, const EncoderParams* pretrained = nullptr);

} // namespace tsvforge
