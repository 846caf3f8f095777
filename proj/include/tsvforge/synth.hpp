#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "tsvforge/data.hpp"

namespace tsvforge {

struct SynthSpec {
  std::size_t length = 2000;
  double daily_amp = 1.0;
  double weekly_amp = 0.0;
  double trend = 0.0;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const SynthSpec&, const SynthSpec&) = default;
};

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j);

/// Hourly univariate series "OT" starting 2016-07-01 00:00:00:
/// trend*t + daily_amp*sin(2 pi t/24) + weekly_amp*sin(2 pi t/168) + N(0, noise_sd^2).
SeriesDataset synth_series(const SynthSpec& spec, std::string name = "synthetic");

} // namespace tsvforge
