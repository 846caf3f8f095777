#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsvforge/tensor.hpp"

namespace tsvforge {

using Timestamp = std::chrono::sys_seconds;

/// Accepts "YYYY-MM-DD HH:MM[:SS]" with a space or 'T' separator, or a bare date.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// Calendar-month offset. A day past the end of the target month is clamped to
/// its last day (Jan 31 + 1 month -> Feb 28/29).
Timestamp add_months(Timestamp ts, int months);

enum class TargetMode { univariate, multivariate };

std::string_view to_string(TargetMode mode);
TargetMode parse_target_mode(std::string_view text);

/// [0, train_end) train, [train_end, val_end) validation, [val_end, test_end) test.
struct SplitBounds {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t test_end = 0;
  friend bool operator==(const SplitBounds&, const SplitBounds&) = default;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

struct SeriesDataset {
  std::string name;
  std::vector<Timestamp> timestamps;
  Tensor values; // [D x T]
  std::vector<std::string> feature_names;
  TargetMode target_mode = TargetMode::multivariate;
  std::optional<SplitBounds> splits;
  std::optional<NormStats> norm_stats;

  std::size_t length() const { return values.rank() == 2 ? values.dim(1) : 0; }
  std::size_t dims() const { return values.rank() == 2 ? values.dim(0) : 0; }
  std::chrono::seconds stride() const;
  const SplitBounds& split_bounds() const;

  /// Shapes agree, timestamps strictly increase with constant stride, splits ordered.
  void validate() const;
};

SeriesDataset parse_csv(std::istream& in, std::string name);
SeriesDataset load_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const SeriesDataset& ds);
void save_csv(const std::filesystem::path& path, const SeriesDataset& ds);

/// Boundaries snap to the first timestamp at or after each calendar-month
/// offset from the first timestamp.
SeriesDataset split_by_months(SeriesDataset ds, int train_months = 12, int val_months = 4, int test_months = 4);
SeriesDataset split_by_ratio(SeriesDataset ds, double train = 0.6, double val = 0.2, double test = 0.2);

/// Per-feature z-score with statistics from the train split only (std floored
/// at 1e-8).
SeriesDataset normalize(SeriesDataset ds);
Tensor denormalize(const Tensor& values, const NormStats& stats);

/// Univariate keeps only `target` (input and output are the same column);
/// multivariate keeps every column.
SeriesDataset select_target(SeriesDataset ds, TargetMode mode, std::string_view target = "OT");

} // namespace tsvforge
