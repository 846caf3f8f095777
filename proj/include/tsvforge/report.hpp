#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tsvforge {

enum class Method { baseline, msm, hybrid, ensemble };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);
/// "all" expands to every method in table order.
std::vector<Method> parse_methods(std::string_view text);

struct ReportRow {
  std::string dataset;
  std::size_t horizon = 0;
  Method method = Method::ensemble;
  double mse = 0.0;
  double mae = 0.0;
  std::optional<double> w1, w2, alpha_a, alpha_b;
};

struct ReportAverage {
  Method method = Method::ensemble;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t rows = 0;
};

struct InputDigest {
  std::string dataset;
  std::string source;
  std::string sha1; // git blob hash of the input bytes
};

/// Forecast errors in normalized (train z-score) units, with the resolved
/// config and input digests needed to reproduce them. No timestamps, so equal
/// inputs give byte-identical files.
struct Report {
  nlohmann::json config = nlohmann::json::object();
  std::vector<InputDigest> inputs;
  std::vector<ReportRow> rows;

  /// Arithmetic mean per method, in order of first appearance.
  std::vector<ReportAverage> averages() const;

  std::string to_csv() const;
  std::string to_json_text() const;
  static Report from_json_text(std::string_view text);

  /// Fixed-width table: one line per (dataset, horizon), a column pair per method.
  std::string render_table() const;
};

/// SHA-1 of "blob <size>\0<content>", as git computes object ids.
std::string git_blob_sha1(std::string_view content);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

} // namespace tsvforge
