#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsvforge/boosting.hpp"
#include "tsvforge/checkpoint.hpp"
#include "tsvforge/data.hpp"
#include "tsvforge/encoder.hpp"
#include "tsvforge/ensemble.hpp"
#include "tsvforge/features.hpp"
#include "tsvforge/objectives.hpp"
#include "tsvforge/pretrain.hpp"
#include "tsvforge/report.hpp"
#include "tsvforge/synth.hpp"

namespace tsvforge {

enum class SplitKind { months, ratio };

struct SplitSpec {
  SplitKind kind = SplitKind::months;
  int train_months = 12, val_months = 4, test_months = 4;
  double train_ratio = 0.6, val_ratio = 0.2, test_ratio = 0.2;
};

/// Exactly one of `path` and `synthetic` is set.
struct DatasetSource {
  std::string name;
  std::optional<std::filesystem::path> path;
  std::optional<SynthSpec> synthetic;
};

struct ExperimentConfig {
  std::vector<DatasetSource> datasets;
  TargetMode mode = TargetMode::univariate;
  std::string target = "OT";
  std::vector<std::size_t> horizons{24, 48, 168, 336, 720};
  std::vector<Method> methods{Method::ensemble};
  std::uint64_t seed = 0;
  SplitSpec split;
  EncoderConfig encoder; // input_dim is taken from each dataset
  PretrainConfig pretrain;
  MsmConfig msm;
  std::vector<double> alpha_grid = default_alpha_grid();
  BoostingConfig boosting;
  std::size_t pad = 200;
  std::string output_dir = "out";

  void validate() const;
  /// Every key, defaults included, so a report records the full resolved run.
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

nlohmann::json to_json(const PretrainConfig& config);
PretrainConfig pretrain_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MsmConfig& config);
MsmConfig msm_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BoostingConfig& config);
BoostingConfig boosting_config_from_json(const nlohmann::json& j);

struct PreparedDataset {
  SeriesDataset data; // target-selected, split and normalized
  InputDigest digest;
};

/// Loads or generates the series, selects the target columns, splits and
/// normalizes with train statistics.
PreparedDataset prepare_dataset(const DatasetSource& source, const ExperimentConfig& config);

struct HybridOutcome {
  std::size_t horizon = 0;
  Matrix truth_test;
  Matrix forecast_test;
  double mse = 0.0, mae = 0.0;
  double alpha = 0.0; // stage-1 ridge
};

/// Lag / rolling / Fourier features of the target column, alpha-searched
/// linear stage plus boosted residual correctors, one per forecast step.
/// Forecasts the univariate target only.
HybridOutcome run_hybrid(const SeriesDataset& ds, std::size_t horizon, std::span<const double> alpha_grid,
                         const BoostingConfig& boosting, const std::string& target = "OT");

struct AblationResult {
  Report report;
  std::vector<std::pair<std::string, Checkpoint>> checkpoints; // file stem -> checkpoint
};

/// Runs the selected methods on every dataset. Baseline and ensemble share one
/// pretrained encoder; MSM pretrains its own; hybrid skips pretraining.
AblationResult run_ablation(const ExperimentConfig& config);

} // namespace tsvforge
