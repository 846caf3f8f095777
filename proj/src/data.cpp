#include "tsvforge/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tsvforge/error.hpp"

namespace tsvforge {

namespace {

using namespace std::chrono;

int parse_field(std::string_view text, std::size_t pos, std::size_t width, std::string_view whole) {
  int value = 0;
  if (pos + width > text.size()) throw DataError("truncated timestamp '" + std::string(whole) + "'");
  const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + width, value);
  if (ec != std::errc() || ptr != text.data() + pos + width)
    throw DataError("malformed timestamp '" + std::string(whole) + "'");
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::size_t first_at_or_after(const std::vector<Timestamp>& ts, Timestamp bound) {
  return static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), bound) - ts.begin());
}

} // namespace

Timestamp parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw DataError("malformed timestamp '" + std::string(s) + "'");
  const year_month_day date{year{parse_field(s, 0, 4, s)}, month{static_cast<unsigned>(parse_field(s, 5, 2, s))},
                            day{static_cast<unsigned>(parse_field(s, 8, 2, s))}};
  if (!date.ok()) throw DataError("invalid calendar date '" + std::string(s) + "'");
  int hh = 0, mm = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != ' ' && s[10] != 'T') || s.size() < 16 || s[13] != ':')
      throw DataError("malformed time of day in '" + std::string(s) + "'");
    hh = parse_field(s, 11, 2, s);
    mm = parse_field(s, 14, 2, s);
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() != 19) throw DataError("malformed seconds in '" + std::string(s) + "'");
      ss = parse_field(s, 17, 2, s);
    }
    if (hh > 23 || mm > 59 || ss > 59) throw DataError("time of day out of range in '" + std::string(s) + "'");
  }
  return Timestamp{sys_days{date}.time_since_epoch() + hours{hh} + minutes{mm} + seconds{ss}};
}

std::string format_timestamp(Timestamp ts) {
  const auto day_point = floor<days>(ts);
  const year_month_day date{day_point};
  const hh_mm_ss tod{ts - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

Timestamp add_months(Timestamp ts, int months) {
  const auto day_point = floor<days>(ts);
  const auto time_of_day = ts - day_point;
  year_month_day date{day_point};
  date += std::chrono::months{months};
  if (!date.ok()) date = date.year() / date.month() / last;
  return Timestamp{sys_days{date}.time_since_epoch() + time_of_day};
}

std::string_view to_string(TargetMode mode) {
  return mode == TargetMode::univariate ? "univariate" : "multivariate";
}

TargetMode parse_target_mode(std::string_view text) {
  if (text == "univariate" || text == "S") return TargetMode::univariate;
  if (text == "multivariate" || text == "M") return TargetMode::multivariate;
  throw ConfigError("unknown target mode '" + std::string(text) + "'");
}

std::chrono::seconds SeriesDataset::stride() const {
  if (timestamps.size() < 2) return std::chrono::hours{1};
  return timestamps[1] - timestamps[0];
}

const SplitBounds& SeriesDataset::split_bounds() const {
  if (!splits) throw ContractViolation("dataset '" + name + "' has not been split");
  return *splits;
}

void SeriesDataset::validate() const {
  if (values.rank() != 2) throw DimensionError("dataset values must be [D x T]");
  if (timestamps.size() != length())
    throw DimensionError("dataset has " + std::to_string(timestamps.size()) + " timestamps for " +
                         std::to_string(length()) + " steps");
  if (feature_names.size() != dims()) throw DimensionError("feature name count does not match D");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (timestamps[i] <= timestamps[i - 1])
      throw DataError("timestamps not strictly increasing at row " + std::to_string(i + 1) + " (" +
                      format_timestamp(timestamps[i]) + ")");
    if (timestamps[i] - timestamps[i - 1] != stride())
      throw DataError("irregular sampling stride at row " + std::to_string(i + 1) + " (" +
                      format_timestamp(timestamps[i]) + ")");
  }
  if (splits) {
    const auto& s = *splits;
    if (!(0 < s.train_end && s.train_end < s.val_end && s.val_end < s.test_end && s.test_end <= length()))
      throw DataError("split boundaries out of order");
  }
}

SeriesDataset parse_csv(std::istream& in, std::string name) {
  SeriesDataset ds;
  ds.name = std::move(name);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV");
  std::vector<std::string> header;
  for (const auto cell : split_commas(line)) header.emplace_back(cell);
  if (header.size() < 2) throw DataError("CSV needs a date column followed by at least one value column");
  for (std::size_t c = 1; c < header.size(); ++c) ds.feature_names.emplace_back(header[c]);

  const std::size_t dims = ds.feature_names.size();
  std::vector<double> column_major;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    try {
      ds.timestamps.push_back(parse_timestamp(cells[0]));
    } catch (const DataError& e) {
      throw DataError("row " + std::to_string(row) + ", column '" + header[0] + "': " + e.what());
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      const auto cell = cells[c];
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError("row " + std::to_string(row) + ", column '" + header[c] +
                        "': cannot parse '" + std::string(cell) + "'");
      column_major.push_back(v);
    }
  }
  const std::size_t length = ds.timestamps.size();
  if (length == 0) throw DataError("CSV has no data rows");
  ds.values = Tensor({dims, length});
  for (std::size_t t = 0; t < length; ++t)
    for (std::size_t d = 0; d < dims; ++d) ds.values(d, t) = column_major[t * dims + d];
  ds.validate();
  return ds;
}

SeriesDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, path.stem().string());
}

void write_csv(std::ostream& out, const SeriesDataset& ds) {
  out << "date";
  for (const auto& n : ds.feature_names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < ds.length(); ++t) {
    out << format_timestamp(ds.timestamps[t]);
    for (std::size_t d = 0; d < ds.dims(); ++d) out << ',' << format_double(ds.values(d, t));
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const SeriesDataset& ds) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, ds);
}

SeriesDataset split_by_months(SeriesDataset ds, int train_months, int val_months, int test_months) {
  if (train_months < 1 || val_months < 1 || test_months < 1) throw ConfigError("split months must be >= 1");
  if (ds.timestamps.empty()) throw DataError("cannot split an empty dataset");
  const Timestamp first = ds.timestamps.front();
  const Timestamp end_of_data = ds.timestamps.back() + ds.stride();
  const Timestamp test_bound = add_months(first, train_months + val_months + test_months);
  if (end_of_data < test_bound)
    throw DataError("dataset '" + ds.name + "' spans less than " +
                    std::to_string(train_months + val_months + test_months) + " months");
  SplitBounds s;
  s.train_end = first_at_or_after(ds.timestamps, add_months(first, train_months));
  s.val_end = first_at_or_after(ds.timestamps, add_months(first, train_months + val_months));
  s.test_end = first_at_or_after(ds.timestamps, test_bound);
  ds.splits = s;
  ds.validate();
  return ds;
}

SeriesDataset split_by_ratio(SeriesDataset ds, double train, double val, double test) {
  if (!(train > 0 && val > 0 && test > 0) || train + val + test > 1.0 + 1e-9)
    throw ConfigError("split ratios must be positive and sum to at most 1");
  const double n = static_cast<double>(ds.length());
  constexpr double eps = 1e-9;
  SplitBounds s;
  s.train_end = static_cast<std::size_t>(std::floor(n * train + eps));
  s.val_end = static_cast<std::size_t>(std::floor(n * (train + val) + eps));
  s.test_end = std::min(ds.length(), static_cast<std::size_t>(std::floor(n * (train + val + test) + eps)));
  ds.splits = s;
  ds.validate();
  return ds;
}

SeriesDataset normalize(SeriesDataset ds) {
  const std::size_t train_end = ds.split_bounds().train_end;
  NormStats stats;
  for (std::size_t d = 0; d < ds.dims(); ++d) {
    // shifted accumulation keeps a constant column's mean exact
    const double shift = ds.values(d, 0);
    double sum = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) sum += ds.values(d, t) - shift;
    const double mean = shift + sum / static_cast<double>(train_end);
    double sq = 0.0;
    for (std::size_t t = 0; t < train_end; ++t) {
      const double e = ds.values(d, t) - mean;
      sq += e * e;
    }
    const double std = std::max(std::sqrt(sq / static_cast<double>(train_end)), 1e-8);
    stats.mean.push_back(mean);
    stats.std.push_back(std);
    for (std::size_t t = 0; t < ds.length(); ++t) ds.values(d, t) = (ds.values(d, t) - mean) / std;
  }
  ds.norm_stats = std::move(stats);
  return ds;
}

Tensor denormalize(const Tensor& values, const NormStats& stats) {
  if (values.rank() != 2 || values.dim(0) != stats.mean.size())
    throw DimensionError("denormalize: values " + to_string(values.shape()) + " vs " +
                         std::to_string(stats.mean.size()) + " feature stats");
  Tensor out = values;
  for (std::size_t d = 0; d < values.dim(0); ++d)
    for (std::size_t t = 0; t < values.dim(1); ++t) out(d, t) = values(d, t) * stats.std[d] + stats.mean[d];
  return out;
}

SeriesDataset select_target(SeriesDataset ds, TargetMode mode, std::string_view target) {
  ds.target_mode = mode;
  if (mode == TargetMode::multivariate) return ds;
  const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), target);
  if (it == ds.feature_names.end())
    throw DataError("dataset '" + ds.name + "' has no target column '" + std::string(target) + "'");
  const auto col = static_cast<std::size_t>(it - ds.feature_names.begin());
  Tensor values({1, ds.length()});
  for (std::size_t t = 0; t < ds.length(); ++t) values(0, t) = ds.values(col, t);
  ds.values = std::move(values);
  ds.feature_names = {std::string(target)};
  if (ds.norm_stats) ds.norm_stats = NormStats{{ds.norm_stats->mean[col]}, {ds.norm_stats->std[col]}};
  return ds;
}

} // namespace tsvforge
