#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tsvforge/data.hpp"
#include "tsvforge/tensor.hpp"

namespace tsvforge {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Calendar position of every timestamp, in fractional hours.
struct TimeIndex {
  std::vector<double> hour_of_day;  // [0, 24)
  std::vector<double> hour_of_week; // [0, 168), Monday 00:00 = 0
  double steps_per_hour = 1.0;

  static TimeIndex from_timestamps(std::span<const Timestamp> timestamps);
  std::size_t size() const { return hour_of_day.size(); }
};

/// [T x 2]: sin(2 pi hour / 24), cos(2 pi hour / 24).
Matrix time_features(const TimeIndex& time);

struct ForecastExamples {
  Matrix X;                         // [n x feat_dim]
  Matrix Y;                         // [n x h * D_out], row-major over (step, channel)
  std::vector<std::size_t> anchors; // absolute anchor timestamps
};

/// Direct multi-horizon examples with anchors t in [begin, end - h): the
/// features are the representation column at t (and the time features of t
/// when given), the target is targets[:, t+1 .. t+h] flattened step-major.
/// end == 0 means the full length.
ForecastExamples build_forecast_examples(const Tensor& reps, const Tensor& targets, std::size_t horizon,
                                         const Matrix* time_feats = nullptr, std::size_t begin = 0,
                                         std::size_t end = 0);

struct HybridFeatureConfig {
  std::vector<std::size_t> lags{1, 2, 3, 24, 48, 168};
  std::vector<std::size_t> roll_windows{24, 168};
  double daily_period_hours = 24.0;
  double weekly_period_hours = 168.0;
  std::size_t harmonics = 2;

  /// Lags and windows scaled from hours to steps (x4 for 15-minute data).
  HybridFeatureConfig scaled_to(double steps_per_hour) const;
};

struct HybridFeatures {
  Matrix X;                // [T x n_features]
  std::vector<bool> valid; // false where a lag or window reaches before t = 0
  std::vector<std::string> names;
};

/// Lagged values, trailing anchor-inclusive rolling mean / population std, and
/// daily and weekly Fourier pairs. Row t uses only series values at <= t.
HybridFeatures hybrid_features(const Tensor& series, const TimeIndex& time, const HybridFeatureConfig& config);

} // namespace tsvforge
