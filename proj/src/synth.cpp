#include "tsvforge/synth.hpp"

#include <cmath>
#include <numbers>

#include "tsvforge/error.hpp"
#include "tsvforge/random.hpp"

namespace tsvforge {

void SynthSpec::validate() const {
  if (length < 1) throw ConfigError("synthetic series length must be >= 1");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be finite and >= 0");
  if (!std::isfinite(daily_amp) || !std::isfinite(weekly_amp) || !std::isfinite(trend))
    throw ConfigError("synthetic amplitudes must be finite");
}

nlohmann::json to_json(const SynthSpec& s) {
  return {{"T", s.length},         {"daily_amp", s.daily_amp}, {"weekly_amp", s.weekly_amp},
          {"trend", s.trend},      {"noise_sd", s.noise_sd},   {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  s.length = j.value("T", s.length);
  s.daily_amp = j.value("daily_amp", s.daily_amp);
  s.weekly_amp = j.value("weekly_amp", s.weekly_amp);
  s.trend = j.value("trend", s.trend);
  s.noise_sd = j.value("noise_sd", s.noise_sd);
  s.seed = j.value("seed", s.seed);
  s.validate();
  return s;
}

SeriesDataset synth_series(const SynthSpec& spec, std::string name) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x5E7));
  std::normal_distribution<double> noise(0.0, 1.0);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  SeriesDataset ds;
  ds.name = std::move(name);
  ds.feature_names = {"OT"};
  ds.target_mode = TargetMode::univariate;
  ds.values = Tensor({1, spec.length});
  const Timestamp start = parse_timestamp("2016-07-01 00:00:00");
  for (std::size_t t = 0; t < spec.length; ++t) {
    const double x = static_cast<double>(t);
    double v = spec.trend * x + spec.daily_amp * std::sin(two_pi * x / 24.0) +
               spec.weekly_amp * std::sin(two_pi * x / 168.0);
    if (spec.noise_sd > 0.0) v += spec.noise_sd * noise(rng);
    ds.values(0, t) = v;
    ds.timestamps.push_back(start + std::chrono::hours(t));
  }
  return ds;
}

} // namespace tsvforge
