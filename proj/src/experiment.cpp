#include "tsvforge/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tsvforge/error.hpp"
#include "tsvforge/metrics.hpp"

namespace tsvforge {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown key '" + key + "' in " + where);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json split_to_json(const SplitSpec& s) {
  return {{"kind", s.kind == SplitKind::months ? "months" : "ratio"},
          {"train_months", s.train_months},
          {"val_months", s.val_months},
          {"test_months", s.test_months},
          {"train_ratio", s.train_ratio},
          {"val_ratio", s.val_ratio},
          {"test_ratio", s.test_ratio}};
}

SplitSpec split_from_json(const json& j) {
  reject_unknown(j, {"kind", "train_months", "val_months", "test_months", "train_ratio", "val_ratio", "test_ratio"},
                 "split");
  SplitSpec s;
  const std::string kind = j.value("kind", std::string("months"));
  if (kind == "months")
    s.kind = SplitKind::months;
  else if (kind == "ratio")
    s.kind = SplitKind::ratio;
  else
    throw ConfigError("split kind must be 'months' or 'ratio', got '" + kind + "'");
  s.train_months = j.value("train_months", s.train_months);
  s.val_months = j.value("val_months", s.val_months);
  s.test_months = j.value("test_months", s.test_months);
  s.train_ratio = j.value("train_ratio", s.train_ratio);
  s.val_ratio = j.value("val_ratio", s.val_ratio);
  s.test_ratio = j.value("test_ratio", s.test_ratio);
  return s;
}

json dataset_to_json(const DatasetSource& d) {
  json j{{"name", d.name}};
  if (d.path) j["path"] = d.path->string();
  if (d.synthetic) j["synthetic"] = to_json(*d.synthetic);
  return j;
}

DatasetSource dataset_from_json(const json& j) {
  reject_unknown(j, {"name", "path", "synthetic"}, "dataset entry");
  DatasetSource d;
  d.name = j.value("name", std::string());
  if (j.contains("path")) d.path = j["path"].get<std::string>();
  if (j.contains("synthetic")) d.synthetic = synth_spec_from_json(j["synthetic"]);
  if (d.path.has_value() == d.synthetic.has_value())
    throw ConfigError("a dataset needs exactly one of 'path' and 'synthetic'");
  if (d.name.empty()) d.name = d.path ? d.path->stem().string() : "synthetic";
  return d;
}

} // namespace

json to_json(const PretrainConfig& c) {
  return {{"lr", c.lr}, {"batch_size", c.batch_size}, {"n_iters", c.n_iters}, {"max_train_length", c.max_train_length}};
}

PretrainConfig pretrain_config_from_json(const json& j) {
  reject_unknown(j, {"lr", "batch_size", "n_iters", "max_train_length"}, "pretrain");
  PretrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.n_iters = j.value("n_iters", c.n_iters);
  c.max_train_length = j.value("max_train_length", c.max_train_length);
  c.validate();
  return c;
}

json to_json(const MsmConfig& c) {
  return {{"lambda_max", c.lambda_max},
          {"warmup_fraction", c.warmup_fraction},
          {"decoder_hidden1", c.decoder_hidden1},
          {"decoder_hidden2", c.decoder_hidden2}};
}

MsmConfig msm_config_from_json(const json& j) {
  reject_unknown(j, {"lambda_max", "warmup_fraction", "decoder_hidden1", "decoder_hidden2"}, "msm");
  MsmConfig c;
  c.lambda_max = j.value("lambda_max", c.lambda_max);
  c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
  c.decoder_hidden1 = j.value("decoder_hidden1", c.decoder_hidden1);
  c.decoder_hidden2 = j.value("decoder_hidden2", c.decoder_hidden2);
  c.validate();
  return c;
}

json to_json(const BoostingConfig& c) {
  return {{"n_trees", c.n_trees}, {"depth", c.depth}, {"shrinkage", c.shrinkage}, {"min_samples_leaf", c.min_samples_leaf}};
}

BoostingConfig boosting_config_from_json(const json& j) {
  reject_unknown(j, {"n_trees", "depth", "shrinkage", "min_samples_leaf"}, "boosting");
  BoostingConfig c;
  c.n_trees = j.value("n_trees", c.n_trees);
  c.depth = j.value("depth", c.depth);
  c.shrinkage = j.value("shrinkage", c.shrinkage);
  c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw ConfigError("no datasets configured");
  if (horizons.empty()) throw ConfigError("horizons must be nonempty");
  for (const std::size_t h : horizons)
    if (h < 1) throw ConfigError("horizons must be >= 1");
  if (methods.empty()) throw ConfigError("no methods selected");
  if (alpha_grid.empty()) throw ConfigError("alpha grid is empty");
  for (const double a : alpha_grid)
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha grid values must be finite and > 0");
  std::set<std::string> names;
  for (const auto& d : datasets)
    if (!names.insert(d.name).second) throw ConfigError("duplicate dataset name '" + d.name + "'");
  EncoderConfig enc = encoder;
  enc.validate();
  pretrain.validate();
  msm.validate();
  boosting.validate();
}

json ExperimentConfig::to_json() const {
  json ds = json::array();
  for (const auto& d : datasets) ds.push_back(dataset_to_json(d));
  json ms = json::array();
  for (const Method m : methods) ms.push_back(to_string(m));
  json enc = tsvforge::to_json(encoder);
  enc.erase("input_dim");
  return {{"datasets", std::move(ds)},
          {"mode", to_string(mode)},
          {"target", target},
          {"horizons", horizons},
          {"method", std::move(ms)},
          {"seed", seed},
          {"split", split_to_json(split)},
          {"encoder", std::move(enc)},
          {"pretrain", tsvforge::to_json(pretrain)},
          {"msm", tsvforge::to_json(msm)},
          {"heads", {{"alpha_grid", alpha_grid}, {"boosting", tsvforge::to_json(boosting)}}},
          {"pad", pad},
          {"output_dir", output_dir}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j, {"datasets", "mode", "target", "horizons", "method", "seed", "split", "encoder", "pretrain", "msm",
                     "heads", "pad", "output_dir"},
                 "experiment config");
  ExperimentConfig c;
  try {
    for (const auto& d : j.value("datasets", json::array())) c.datasets.push_back(dataset_from_json(d));
    if (j.contains("mode")) c.mode = parse_target_mode(j["mode"].get<std::string>());
    c.target = j.value("target", c.target);
    if (j.contains("horizons")) c.horizons = j["horizons"].get<std::vector<std::size_t>>();
    if (j.contains("method")) {
      c.methods.clear();
      const json& m = j["method"];
      if (m.is_string()) {
        c.methods = parse_methods(m.get<std::string>());
      } else {
        for (const auto& item : m)
          for (const Method parsed : parse_methods(item.get<std::string>()))
            if (std::find(c.methods.begin(), c.methods.end(), parsed) == c.methods.end()) c.methods.push_back(parsed);
      }
      std::sort(c.methods.begin(), c.methods.end());
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("split")) c.split = split_from_json(j["split"]);
    if (j.contains("encoder")) {
      reject_unknown(j["encoder"], {"input_dim", "hidden_dim", "output_dim", "depth", "kernel_width", "mask_prob"},
                     "encoder");
      c.encoder = encoder_config_from_json(j["encoder"]);
    }
    if (j.contains("pretrain")) c.pretrain = pretrain_config_from_json(j["pretrain"]);
    if (j.contains("msm")) c.msm = msm_config_from_json(j["msm"]);
    if (j.contains("heads")) {
      const json& h = j["heads"];
      reject_unknown(h, {"alpha_grid", "boosting"}, "heads");
      if (h.contains("alpha_grid")) c.alpha_grid = h["alpha_grid"].get<std::vector<double>>();
      if (h.contains("boosting")) c.boosting = boosting_config_from_json(h["boosting"]);
    }
    c.pad = j.value("pad", c.pad);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

PreparedDataset prepare_dataset(const DatasetSource& source, const ExperimentConfig& config) {
  PreparedDataset out;
  SeriesDataset ds;
  std::string bytes;
  if (source.path) {
    bytes = read_file(*source.path);
    std::istringstream in(bytes);
    ds = parse_csv(in, source.name);
    out.digest.source = source.path->string();
  } else if (source.synthetic) {
    ds = synth_series(*source.synthetic, source.name);
    std::ostringstream csv;
    write_csv(csv, ds);
    bytes = csv.str();
    out.digest.source = "synthetic:" + to_json(*source.synthetic).dump();
  } else {
    throw ConfigError("dataset '" + source.name + "' has neither a path nor a synthetic spec");
  }
  out.digest.dataset = source.name;
  out.digest.sha1 = git_blob_sha1(bytes);

  ds = select_target(std::move(ds), config.mode, config.target);
  const SplitSpec& s = config.split;
  ds = s.kind == SplitKind::months ? split_by_months(std::move(ds), s.train_months, s.val_months, s.test_months)
                                   : split_by_ratio(std::move(ds), s.train_ratio, s.val_ratio, s.test_ratio);
  out.data = normalize(std::move(ds));
  return out;
}

HybridOutcome run_hybrid(const SeriesDataset& ds, std::size_t horizon, std::span<const double> alpha_grid,
                         const BoostingConfig& boosting, const std::string& target) {
  const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), target);
  if (it == ds.feature_names.end()) throw ConfigError("target column '" + target + "' not in dataset " + ds.name);
  const auto col = static_cast<std::size_t>(it - ds.feature_names.begin());
  const SplitBounds& bounds = ds.split_bounds();

  Tensor series({1, ds.length()});
  for (std::size_t t = 0; t < ds.length(); ++t) series(0, t) = ds.values(col, t);
  const TimeIndex time = TimeIndex::from_timestamps(ds.timestamps);
  const HybridFeatures hf = hybrid_features(series, time, HybridFeatureConfig{}.scaled_to(time.steps_per_hour));
  const auto first_valid =
      static_cast<std::size_t>(std::find(hf.valid.begin(), hf.valid.end(), true) - hf.valid.begin());
  const Tensor feats = to_tensor(hf.X.transpose());

  auto examples = [&](std::size_t begin, std::size_t end) {
    return build_forecast_examples(feats, series, horizon, nullptr, std::max(begin, first_valid), end);
  };
  const ForecastExamples train = examples(0, bounds.train_end);
  const ForecastExamples val = examples(bounds.train_end, bounds.val_end);
  const ForecastExamples test = examples(bounds.val_end, bounds.test_end);

  AlphaSearchResult stage1 = alpha_search(train.X, train.Y, val.X, val.Y, alpha_grid);
  HybridOutcome out;
  out.horizon = horizon;
  out.alpha = stage1.best_alpha;
  const BoostedResidualModel model = boosted_residual_fit(train.X, train.Y, std::move(stage1.head), boosting);
  out.truth_test = test.Y;
  out.forecast_test = model.predict(test.X);
  out.mse = mse(out.forecast_test, out.truth_test);
  out.mae = mae(out.forecast_test, out.truth_test);
  return out;
}

AblationResult run_ablation(const ExperimentConfig& config) {
  config.validate();
  const auto wants = [&](Method m) {
    return std::find(config.methods.begin(), config.methods.end(), m) != config.methods.end();
  };

  AblationResult result;
  result.report.config = config.to_json();
  for (const DatasetSource& source : config.datasets) {
    PreparedDataset prepared = prepare_dataset(source, config);
    const SeriesDataset& ds = prepared.data;
    result.report.inputs.push_back(prepared.digest);
    const json meta{{"dataset", source.name}, {"seed", config.seed}};

    PipelineConfig pc;
    pc.encoder = config.encoder;
    pc.pretrain = config.pretrain;
    pc.pretrain.seed = config.seed;
    pc.pretrain.msm.reset();
    pc.alpha_grid = config.alpha_grid;
    pc.pad = config.pad;

    std::optional<PipelineResult> shared, msm;
    if (wants(Method::baseline) || wants(Method::ensemble)) {
      shared = run_pipeline(ds, config.horizons, pc);
      result.checkpoints.emplace_back(source.name + ".encoder",
                                      encoder_checkpoint(shared->encoder_config, shared->encoder, meta));
      result.checkpoints.emplace_back(source.name + ".ensemble", ensemble_checkpoint(shared->model, meta));
    }
    if (wants(Method::msm)) {
      PipelineConfig mc = pc;
      mc.pretrain.msm = config.msm;
      msm = run_pipeline(ds, config.horizons, mc);
      result.checkpoints.emplace_back(source.name + ".msm_encoder",
                                      encoder_checkpoint(msm->encoder_config, msm->encoder, meta));
    }

    for (std::size_t i = 0; i < config.horizons.size(); ++i) {
      const std::size_t h = config.horizons[i];
      if (wants(Method::baseline)) {
        const HorizonOutcome& o = shared->horizons[i];
        result.report.rows.push_back({source.name, h, Method::baseline, o.baseline_mse, o.baseline_mae, std::nullopt,
                                      std::nullopt, o.alpha_a, std::nullopt});
      }
      if (wants(Method::msm)) {
        const HorizonOutcome& o = msm->horizons[i];
        result.report.rows.push_back({source.name, h, Method::msm, o.baseline_mse, o.baseline_mae, std::nullopt,
                                      std::nullopt, o.alpha_a, std::nullopt});
      }
      if (wants(Method::hybrid)) {
        const HybridOutcome o = run_hybrid(ds, h, config.alpha_grid, config.boosting, config.target);
        result.report.rows.push_back(
            {source.name, h, Method::hybrid, o.mse, o.mae, std::nullopt, std::nullopt, o.alpha, std::nullopt});
      }
      if (wants(Method::ensemble)) {
        const HorizonOutcome& o = shared->horizons[i];
        result.report.rows.push_back(
            {source.name, h, Method::ensemble, o.mse, o.mae, o.weights.w1, o.weights.w2, o.alpha_a, o.alpha_b});
      }
    }
  }
  return result;
}

} // namespace tsvforge
