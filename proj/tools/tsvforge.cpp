// Command-line front end: pretrain, encode, forecast, ablate, synth, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsvforge/checkpoint.hpp"
#include "tsvforge/encoder.hpp"
#include "tsvforge/ensemble.hpp"
#include "tsvforge/error.hpp"
#include "tsvforge/experiment.hpp"
#include "tsvforge/report.hpp"
#include "tsvforge/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tsvforge;

namespace {

// Flags shared by the experiment-driven subcommands. Unset flags leave the
// config file (or the defaults) untouched.
struct ExperimentFlags {
  std::string config_path;
  std::vector<std::string> data;
  std::optional<std::string> mode, method, split, output_dir, target;
  std::vector<std::size_t> horizons;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_iters, batch_size, max_train_length, pad;
  std::optional<double> lr;
  std::optional<std::size_t> synth_length;
  std::optional<double> synth_noise;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--data", data, "CSV dataset path (repeatable)");
    cmd->add_option("--mode", mode, "univariate|multivariate");
    cmd->add_option("--target", target, "target column for univariate mode");
    cmd->add_option("--horizons", horizons, "forecast horizons")->delimiter(',');
    cmd->add_option("--method", method, "baseline|msm|hybrid|ensemble|all");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--split", split, "months|ratio");
    cmd->add_option("--n-iters", n_iters, "pretraining iterations");
    cmd->add_option("--batch-size", batch_size, "pretraining batch size");
    cmd->add_option("--lr", lr, "pretraining learning rate");
    cmd->add_option("--max-train-length", max_train_length, "pretraining window length");
    cmd->add_option("--pad", pad, "causal encoding left padding");
    cmd->add_option("--output-dir", output_dir, "directory for reports and checkpoints");
    cmd->add_option("--synthetic", synth_length, "use a synthetic daily series of this length instead of --data");
    cmd->add_option("--noise-sd", synth_noise, "noise level of the --synthetic series");
  }

  ExperimentConfig resolve() const {
    json j = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      try {
        j = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + config_path + ": " + e.what());
      }
    }
    if (!data.empty() || synth_length) {
      json ds = json::array();
      for (const auto& path : data) ds.push_back({{"path", path}});
      if (synth_length) {
        json spec{{"T", *synth_length}, {"noise_sd", synth_noise.value_or(0.0)}};
        if (seed) spec["seed"] = *seed;
        ds.push_back({{"name", "synthetic"}, {"synthetic", spec}});
      }
      j["datasets"] = ds;
    }
    if (synth_length && !split && !j.contains("split")) j["split"] = {{"kind", "ratio"}};
    if (mode) j["mode"] = *mode;
    if (target) j["target"] = *target;
    if (!horizons.empty()) j["horizons"] = horizons;
    if (method) j["method"] = *method;
    if (seed) j["seed"] = *seed;
    if (split) j["split"]["kind"] = *split;
    if (n_iters) j["pretrain"]["n_iters"] = *n_iters;
    if (batch_size) j["pretrain"]["batch_size"] = *batch_size;
    if (lr) j["pretrain"]["lr"] = *lr;
    if (max_train_length) j["pretrain"]["max_train_length"] = *max_train_length;
    if (pad) j["pad"] = *pad;
    if (output_dir) j["output_dir"] = *output_dir;
    return ExperimentConfig::from_json(j);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

PipelineConfig pipeline_config(const ExperimentConfig& c, bool with_msm) {
  PipelineConfig pc;
  pc.encoder = c.encoder;
  pc.pretrain = c.pretrain;
  pc.pretrain.seed = c.seed;
  if (with_msm) pc.pretrain.msm = c.msm;
  pc.alpha_grid = c.alpha_grid;
  pc.pad = c.pad;
  return pc;
}

int cmd_pretrain(const ExperimentFlags& flags, bool msm, const std::string& out_path) {
  const ExperimentConfig config = flags.resolve();
  const DatasetSource& source = config.datasets.front();
  const PreparedDataset prepared = prepare_dataset(source, config);
  EncoderConfig enc = config.encoder;
  enc.input_dim = prepared.data.dims();
  const PipelineConfig pc = pipeline_config(config, msm);
  const PretrainResult result = pretrain(prepared.data, enc, pc.pretrain);

  const fs::path dir(config.output_dir);
  const fs::path ckpt_path = out_path.empty() ? dir / (source.name + ".encoder.json") : fs::path(out_path);
  json meta{{"dataset", source.name}, {"seed", config.seed}, {"input_sha1", prepared.digest.sha1}, {"msm", msm}};
  save_checkpoint(ckpt_path, encoder_checkpoint(enc, result.params, meta));
  std::ostringstream log;
  write_training_log(log, result.log);
  fs::path log_path = ckpt_path;
  log_path.replace_extension(".log.jsonl");
  write_text(log_path, log.str());
  std::cout << "checkpoint " << ckpt_path.string() << "\ntraining log " << log_path.string() << "\n";
  return 0;
}

int cmd_encode(const ExperimentFlags& flags, const std::string& ckpt_path, const std::string& out_path) {
  const ExperimentConfig config = flags.resolve();
  const PreparedDataset prepared = prepare_dataset(config.datasets.front(), config);
  const auto [enc, params] = encoder_from_checkpoint(load_checkpoint(ckpt_path));
  const Tensor reps = encode_series(prepared.data, params, enc, config.pad);

  std::ostringstream out;
  out << "date";
  for (std::size_t c = 0; c < reps.dim(0); ++c) out << ",z" << c;
  out << "\n";
  for (std::size_t t = 0; t < reps.dim(1); ++t) {
    out << format_timestamp(prepared.data.timestamps[t]);
    for (std::size_t c = 0; c < reps.dim(0); ++c) out << ',' << format_double(reps(c, t));
    out << "\n";
  }
  write_text(out_path, out.str());
  std::cout << "wrote " << reps.dim(1) << " x " << reps.dim(0) << " representations to " << out_path << "\n";
  return 0;
}

int cmd_forecast(const ExperimentFlags& flags, const std::string& ckpt_path) {
  ExperimentConfig config = flags.resolve();
  config.methods = {Method::baseline, Method::ensemble};
  const DatasetSource& source = config.datasets.front();
  const PreparedDataset prepared = prepare_dataset(source, config);

  std::optional<EncoderParams> loaded;
  PipelineConfig pc = pipeline_config(config, false);
  if (!ckpt_path.empty()) {
    auto [enc, params] = encoder_from_checkpoint(load_checkpoint(ckpt_path));
    pc.encoder = enc;
    loaded = std::move(params);
  }
  const PipelineResult result = run_pipeline(prepared.data, config.horizons, pc, loaded ? &*loaded : nullptr);

  Report report;
  report.config = config.to_json();
  if (!ckpt_path.empty()) report.config["encoder_checkpoint"] = ckpt_path;
  report.inputs.push_back(prepared.digest);
  for (const auto& o : result.horizons) {
    report.rows.push_back({source.name, o.horizon, Method::baseline, o.baseline_mse, o.baseline_mae, std::nullopt,
                           std::nullopt, o.alpha_a, std::nullopt});
    report.rows.push_back(
        {source.name, o.horizon, Method::ensemble, o.mse, o.mae, o.weights.w1, o.weights.w2, o.alpha_a, o.alpha_b});
  }
  const fs::path dir(config.output_dir);
  const json meta{{"dataset", source.name}, {"seed", config.seed}};
  save_checkpoint(dir / (source.name + ".ensemble.json"), ensemble_checkpoint(result.model, meta));
  if (!loaded) save_checkpoint(dir / (source.name + ".encoder.json"), encoder_checkpoint(result.encoder_config, result.encoder, meta));
  write_text(dir / "forecast_report.csv", report.to_csv());
  write_text(dir / "forecast_report.json", report.to_json_text());
  std::cout << report.render_table();
  return 0;
}

int cmd_ablate(const ExperimentFlags& flags) {
  const ExperimentConfig config = flags.resolve();
  const AblationResult result = run_ablation(config);
  const fs::path dir(config.output_dir);
  for (const auto& [stem, ckpt] : result.checkpoints) save_checkpoint(dir / (stem + ".json"), ckpt);
  write_text(dir / "report.csv", result.report.to_csv());
  write_text(dir / "report.json", result.report.to_json_text());
  std::cout << result.report.render_table();
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive time-series representations with ensemble ridge forecasting"};
  app.require_subcommand(1);

  ExperimentFlags pretrain_flags, encode_flags, forecast_flags, ablate_flags;
  bool pretrain_msm = false;
  std::string pretrain_out, encode_ckpt, encode_out = "representations.csv", forecast_ckpt;

  auto* pretrain_cmd = app.add_subcommand("pretrain", "train the encoder on the train split");
  pretrain_flags.attach(pretrain_cmd);
  pretrain_cmd->add_flag("--msm", pretrain_msm, "add the masked reconstruction objective");
  pretrain_cmd->add_option("--out", pretrain_out, "checkpoint path");

  auto* encode_cmd = app.add_subcommand("encode", "causal representations of a dataset");
  encode_flags.attach(encode_cmd);
  encode_cmd->add_option("--checkpoint", encode_ckpt, "encoder checkpoint")->required();
  encode_cmd->add_option("--out", encode_out, "output CSV");

  auto* forecast_cmd = app.add_subcommand("forecast", "fit heads, select weights and evaluate on test");
  forecast_flags.attach(forecast_cmd);
  forecast_cmd->add_option("--checkpoint", forecast_ckpt, "encoder checkpoint (pretrains when omitted)");

  auto* ablate_cmd = app.add_subcommand("ablate", "run the method comparison and write a report");
  ablate_flags.attach(ablate_cmd);

  SynthSpec synth;
  std::string synth_out = "synthetic.csv";
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic seasonal series as CSV");
  synth_cmd->add_option("--T", synth.length, "number of hourly steps");
  synth_cmd->add_option("--daily-amp", synth.daily_amp, "amplitude of the 24-step sinusoid");
  synth_cmd->add_option("--weekly-amp", synth.weekly_amp, "amplitude of the 168-step sinusoid");
  synth_cmd->add_option("--trend", synth.trend, "linear trend per step");
  synth_cmd->add_option("--noise-sd", synth.noise_sd, "standard deviation of Gaussian noise");
  synth_cmd->add_option("--seed", synth.seed, "noise seed");
  synth_cmd->add_option("--out", synth_out, "output CSV");

  std::string report_in;
  auto* report_cmd = app.add_subcommand("report", "print a report file as a table");
  report_cmd->add_option("input", report_in, "report JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::config);
  }

  try {
    if (*pretrain_cmd) return cmd_pretrain(pretrain_flags, pretrain_msm, pretrain_out);
    if (*encode_cmd) return cmd_encode(encode_flags, encode_ckpt, encode_out);
    if (*forecast_cmd) return cmd_forecast(forecast_flags, forecast_ckpt);
    if (*ablate_cmd) return cmd_ablate(ablate_flags);
    if (*synth_cmd) {
      const SeriesDataset ds = synth_series(synth);
      save_csv(synth_out, ds);
      std::cout << "wrote " << ds.length() << " rows to " << synth_out << "\n";
      return 0;
    }
    if (*report_cmd) {
      std::cout << Report::from_json_text(read_text(report_in)).render_table();
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
