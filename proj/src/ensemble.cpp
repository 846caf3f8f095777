#include "tsvforge/ensemble.hpp"

#include <cmath>
#include <string>

#include "tsvforge/error.hpp"
#include "tsvforge/metrics.hpp"

namespace tsvforge {

using nlohmann::json;

WeightGrid WeightGrid::standard() {
  std::vector<WeightPair> pairs;
  for (int k = 0; k < 17; ++k) {
    const double w1 = (18 - k) / 20.0;
    pairs.push_back({w1, 1.0 - w1});
  }
  return WeightGrid(std::move(pairs));
}

WeightGrid::WeightGrid(std::vector<WeightPair> candidates) : candidates_(std::move(candidates)) {
  if (candidates_.empty()) throw ConfigError("weight grid is empty");
  for (const auto& c : candidates_)
    if (!(c.w1 >= 0.0 && c.w2 >= 0.0) || std::abs(c.w1 + c.w2 - 1.0) > 1e-12)
      throw ConfigError("weight pairs must be nonnegative and sum to 1");
}

double val_objective(const Matrix& pred, const Matrix& truth) { return std::sqrt(mse(pred, truth)) + mae(pred, truth); }

Matrix blend(const Matrix& a, const Matrix& b, WeightPair w) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("blended predictions differ in shape");
  // b + w1 (a - b) equals w1 a + w2 b for w2 = 1 - w1, and is exactly b
  // whenever a == b, so identical heads tie exactly across the grid.
  return b + w.w1 * (a - b);
}

WeightSelection select_weights(const Matrix& pred_a, const Matrix& pred_b, const Matrix& truth,
                               const WeightGrid& grid) {
  WeightSelection sel;
  bool first = true;
  for (const WeightPair& w : grid.candidates()) {
    const double score = val_objective(blend(pred_a, pred_b, w), truth);
    sel.candidate_scores.push_back(score);
    if (first || score < sel.score || (score == sel.score && w.w1 > sel.weights.w1)) {
      sel.weights = w;
      sel.score = score;
      first = false;
    }
  }
  return sel;
}

void EnsembleModel::insert(HorizonHeads heads) {
  const std::size_t h = heads.horizon;
  by_horizon_.insert_or_assign(h, std::move(heads));
}

const HorizonHeads& EnsembleModel::at(std::size_t horizon) const {
  const auto it = by_horizon_.find(horizon);
  if (it == by_horizon_.end()) throw LookupError("no ensemble fitted for horizon " + std::to_string(horizon));
  return it->second;
}

std::vector<std::size_t> EnsembleModel::horizons() const {
  std::vector<std::size_t> out;
  for (const auto& [h, _] : by_horizon_) out.push_back(h);
  return out;
}

Matrix ensemble_forecast(const EnsembleModel& model, const Matrix& reps, const Matrix& time, std::size_t horizon,
                         std::optional<WeightPair> weights) {
  const HorizonHeads& heads = model.at(horizon);
  if (time.rows() != reps.rows()) throw DimensionError("time features and representations differ in row count");
  Matrix enhanced(reps.rows(), reps.cols() + time.cols());
  enhanced << reps, time;
  return blend(heads.head_a.predict(reps), heads.head_b.predict(enhanced), weights.value_or(heads.weights));
}

namespace {

void push_head(Checkpoint& ckpt, const std::string& prefix, const RidgeHead& head) {
  ckpt.tensors.push_back({prefix + ".mean", to_tensor(head.feature_mean())});
  ckpt.tensors.push_back({prefix + ".scale", to_tensor(head.feature_scale())});
  ckpt.tensors.push_back({prefix + ".weights", to_tensor(head.weights())});
}

RidgeHead read_head(const Checkpoint& ckpt, const std::string& prefix, double alpha) {
  const Matrix mean = to_eigen(ckpt.get(prefix + ".mean"));
  const Matrix scale = to_eigen(ckpt.get(prefix + ".scale"));
  if (mean.cols() != 1 || scale.cols() != 1) throw DataError("ridge statistics in '" + prefix + "' are not vectors");
  return RidgeHead(alpha, mean.col(0), scale.col(0), to_eigen(ckpt.get(prefix + ".weights")));
}

} // namespace

Checkpoint ensemble_checkpoint(const EnsembleModel& model, json meta) {
  Checkpoint ckpt;
  ckpt.kind = "ensemble";
  json horizons = json::array();
  for (const std::size_t h : model.horizons()) {
    const HorizonHeads& heads = model.at(h);
    const std::string p = "h" + std::to_string(h);
    push_head(ckpt, p + ".A", heads.head_a);
    push_head(ckpt, p + ".B", heads.head_b);
    horizons.push_back({{"horizon", h},
                        {"w1", heads.weights.w1},
                        {"w2", heads.weights.w2},
                        {"alpha_A", heads.head_a.alpha()},
                        {"alpha_B", heads.head_b.alpha()},
                        {"val_score", heads.val_score}});
  }
  meta["horizons"] = std::move(horizons);
  ckpt.meta = std::move(meta);
  return ckpt;
}

EnsembleModel ensemble_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "ensemble") throw DataError("checkpoint kind is '" + ckpt.kind + "', expected 'ensemble'");
  EnsembleModel model;
  try {
    for (const auto& entry : ckpt.meta.at("horizons")) {
      HorizonHeads heads;
      heads.horizon = entry.at("horizon").get<std::size_t>();
      const std::string p = "h" + std::to_string(heads.horizon);
      heads.head_a = read_head(ckpt, p + ".A", entry.at("alpha_A").get<double>());
      heads.head_b = read_head(ckpt, p + ".B", entry.at("alpha_B").get<double>());
      heads.weights = {entry.at("w1").get<double>(), entry.at("w2").get<double>()};
      heads.val_score = entry.at("val_score").get<double>();
      model.insert(std::move(heads));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ensemble checkpoint: ") + e.what());
  }
  return model;
}

Tensor encode_series(const SeriesDataset& ds, const EncoderParams& params, const EncoderConfig& config,
                     std::size_t pad) {
  if (ds.dims() != config.input_dim)
    throw DimensionError("encoder expects " + std::to_string(config.input_dim) + " input channels, dataset has " +
                         std::to_string(ds.dims()));
  return encode_causal_padded(ds.values, params, config, pad);
}

PipelineResult run_pipeline(const SeriesDataset& ds, std::span<const std::size_t> horizons,
                            const PipelineConfig& config, const EncoderParams* pretrained) {
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  for (const std::size_t h : horizons)
    if (h < 1) throw ConfigError("horizons must be >= 1");
  ds.validate();
  const SplitBounds& bounds = ds.split_bounds();

  PipelineResult result;
  result.encoder_config = config.encoder;
  result.encoder_config.input_dim = ds.dims();
  if (pretrained) {
    result.encoder = *pretrained;
  } else {
    PretrainResult trained = pretrain(ds, result.encoder_config, config.pretrain);
    result.encoder = std::move(trained.params);
    result.log = std::move(trained.log);
  }

  const Tensor reps = encode_series(ds, result.encoder, result.encoder_config, config.pad);
  const Matrix time = time_features(TimeIndex::from_timestamps(ds.timestamps));
  const auto rep_dim = static_cast<Eigen::Index>(reps.dim(0));

  for (const std::size_t h : horizons) {
    const ForecastExamples train = build_forecast_examples(reps, ds.values, h, &time, 0, bounds.train_end);
    const ForecastExamples val = build_forecast_examples(reps, ds.values, h, &time, bounds.train_end, bounds.val_end);
    const ForecastExamples test = build_forecast_examples(reps, ds.values, h, &time, bounds.val_end, bounds.test_end);

    AlphaSearchResult a = alpha_search(train.X.leftCols(rep_dim), train.Y, val.X.leftCols(rep_dim), val.Y,
                                       config.alpha_grid);
    AlphaSearchResult b = alpha_search(train.X, train.Y, val.X, val.Y, config.alpha_grid);
    const WeightSelection sel =
        select_weights(a.head.predict(val.X.leftCols(rep_dim)), b.head.predict(val.X), val.Y, config.weight_grid);

    HorizonOutcome out;
    out.horizon = h;
    out.truth_test = test.Y;
    out.forecast_a_test = a.head.predict(test.X.leftCols(rep_dim));
    out.forecast_b_test = b.head.predict(test.X);
    out.forecast_test = blend(out.forecast_a_test, out.forecast_b_test, sel.weights);
    out.mse = mse(out.forecast_test, test.Y);
    out.mae = mae(out.forecast_test, test.Y);
    out.baseline_mse = mse(out.forecast_a_test, test.Y);
    out.baseline_mae = mae(out.forecast_a_test, test.Y);
    out.weights = sel.weights;
    out.alpha_a = a.best_alpha;
    out.alpha_b = b.best_alpha;
    out.val_score = sel.score;
    out.candidate_val_scores = sel.candidate_scores;
    result.horizons.push_back(std::move(out));

    result.model.insert({h, std::move(a.head), std::move(b.head), sel.weights, sel.score});
  }
  return result;
}

} // namespace tsvforge
