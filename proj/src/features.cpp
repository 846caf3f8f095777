#include "tsvforge/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "tsvforge/error.hpp"

namespace tsvforge {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

} // namespace

TimeIndex TimeIndex::from_timestamps(std::span<const Timestamp> timestamps) {
  using namespace std::chrono;
  TimeIndex index;
  for (const Timestamp ts : timestamps) {
    const auto day_point = floor<days>(ts);
    const double hour = duration<double, std::ratio<3600>>(ts - day_point).count();
    const unsigned weekday = std::chrono::weekday{day_point}.iso_encoding() - 1; // Monday = 0
    index.hour_of_day.push_back(hour);
    index.hour_of_week.push_back(24.0 * weekday + hour);
  }
  if (timestamps.size() >= 2) {
    const double stride_hours = duration<double, std::ratio<3600>>(timestamps[1] - timestamps[0]).count();
    index.steps_per_hour = 1.0 / stride_hours;
  }
  return index;
}

Matrix time_features(const TimeIndex& time) {
  Matrix out(static_cast<Eigen::Index>(time.size()), 2);
  for (std::size_t t = 0; t < time.size(); ++t) {
    const double angle = kTwoPi * time.hour_of_day[t] / 24.0;
    out(static_cast<Eigen::Index>(t), 0) = std::sin(angle);
    out(static_cast<Eigen::Index>(t), 1) = std::cos(angle);
  }
  return out;
}

ForecastExamples build_forecast_examples(const Tensor& reps, const Tensor& targets, std::size_t horizon,
                                         const Matrix* time_feats, std::size_t begin, std::size_t end) {
  if (reps.rank() != 2 || targets.rank() != 2 || reps.dim(1) != targets.dim(1))
    throw DimensionError("representations " + to_string(reps.shape()) + " and targets " +
                         to_string(targets.shape()) + " are not aligned in time");
  if (horizon < 1) throw ContractViolation("horizon must be >= 1");
  if (end == 0) end = reps.dim(1);
  if (begin > end || end > reps.dim(1)) throw ContractViolation("example range outside the series");
  if (end - begin <= horizon)
    throw DataError("range of " + std::to_string(end - begin) + " steps leaves no examples at horizon " +
                    std::to_string(horizon));
  if (time_feats && static_cast<std::size_t>(time_feats->rows()) != reps.dim(1))
    throw DimensionError("time features do not cover every timestamp");

  const std::size_t rep_dim = reps.dim(0), out_dim = targets.dim(0);
  const std::size_t extra = time_feats ? static_cast<std::size_t>(time_feats->cols()) : 0;
  const std::size_t n = end - begin - horizon;
  ForecastExamples ex;
  ex.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rep_dim + extra));
  ex.Y.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(horizon * out_dim));
  ex.anchors.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t t = begin + p;
    const auto row = static_cast<Eigen::Index>(p);
    for (std::size_t c = 0; c < rep_dim; ++c) ex.X(row, static_cast<Eigen::Index>(c)) = reps(c, t);
    for (std::size_t c = 0; c < extra; ++c)
      ex.X(row, static_cast<Eigen::Index>(rep_dim + c)) = (*time_feats)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
    for (std::size_t k = 0; k < horizon; ++k)
      for (std::size_t d = 0; d < out_dim; ++d)
        ex.Y(row, static_cast<Eigen::Index>(k * out_dim + d)) = targets(d, t + 1 + k);
    ex.anchors.push_back(t);
  }
  return ex;
}

HybridFeatureConfig HybridFeatureConfig::scaled_to(double steps_per_hour) const {
  HybridFeatureConfig out = *this;
  auto scale = [steps_per_hour](std::size_t hours) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(hours) * steps_per_hour)));
  };
  std::transform(lags.begin(), lags.end(), out.lags.begin(), scale);
  std::transform(roll_windows.begin(), roll_windows.end(), out.roll_windows.begin(), scale);
  return out;
}

HybridFeatures hybrid_features(const Tensor& series, const TimeIndex& time, const HybridFeatureConfig& config) {
  if (series.rank() != 2 || series.dim(0) != 1)
    throw DimensionError("hybrid features need a univariate [1 x T] series, got " + to_string(series.shape()));
  const std::size_t length = series.dim(1);
  if (time.size() != length) throw DimensionError("time index does not match the series length");
  for (std::size_t lag : config.lags)
    if (lag < 1 || lag >= length) throw ConfigError("lag " + std::to_string(lag) + " invalid for T=" + std::to_string(length));
  for (std::size_t w : config.roll_windows)
    if (w < 1 || w >= length)
      throw ConfigError("rolling window " + std::to_string(w) + " invalid for T=" + std::to_string(length));

  HybridFeatures out;
  for (std::size_t lag : config.lags) out.names.push_back("lag_" + std::to_string(lag));
  for (std::size_t w : config.roll_windows) {
    out.names.push_back("roll_mean_" + std::to_string(w));
    out.names.push_back("roll_std_" + std::to_string(w));
  }
  for (const char* period : {"daily", "weekly"})
    for (std::size_t k = 1; k <= config.harmonics; ++k) {
      out.names.push_back(std::string(period) + "_sin_" + std::to_string(k));
      out.names.push_back(std::string(period) + "_cos_" + std::to_string(k));
    }

  std::size_t history = 0;
  for (std::size_t lag : config.lags) history = std::max(history, lag);
  for (std::size_t w : config.roll_windows) history = std::max(history, w - 1);

  out.X = Matrix::Zero(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(out.names.size()));
  out.valid.assign(length, false);
  for (std::size_t t = 0; t < length; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    Eigen::Index col = 0;
    for (std::size_t lag : config.lags) out.X(row, col++) = t >= lag ? series(0, t - lag) : 0.0;
    for (std::size_t w : config.roll_windows) {
      const std::size_t first = t + 1 >= w ? t + 1 - w : 0;
      const double count = static_cast<double>(t + 1 - first);
      double mean = 0.0;
      for (std::size_t s = first; s <= t; ++s) mean += series(0, s);
      mean /= count;
      double var = 0.0;
      for (std::size_t s = first; s <= t; ++s) var += (series(0, s) - mean) * (series(0, s) - mean);
      out.X(row, col++) = mean;
      out.X(row, col++) = std::sqrt(var / count);
    }
    for (const auto& [position, period] : {std::pair{time.hour_of_day[t], config.daily_period_hours},
                                           std::pair{time.hour_of_week[t], config.weekly_period_hours}})
      for (std::size_t k = 1; k <= config.harmonics; ++k) {
        const double angle = kTwoPi * static_cast<double>(k) * position / period;
        out.X(row, col++) = std::sin(angle);
        out.X(row, col++) = std::cos(angle);
      }
    out.valid[t] = t >= history;
  }
  return out;
}

} // namespace tsvforge
