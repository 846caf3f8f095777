#include "tsvforge/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "tsvforge/error.hpp"

namespace tsvforge {

using nlohmann::json;

namespace {

constexpr std::array kMethods{Method::baseline, Method::msm, Method::hybrid, Method::ensemble};

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

} // namespace

std::string_view to_string(Method method) {
  switch (method) {
  case Method::baseline: return "baseline";
  case Method::msm: return "msm";
  case Method::hybrid: return "hybrid";
  case Method::ensemble: return "ensemble";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (const Method m : kMethods)
    if (to_string(m) == text) return m;
  throw ConfigError("unknown method '" + std::string(text) + "' (baseline|msm|hybrid|ensemble|all)");
}

std::vector<Method> parse_methods(std::string_view text) {
  if (text == "all") return {kMethods.begin(), kMethods.end()};
  return {parse_method(text)};
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw ContractViolation("cannot format number");
  return std::string(buf.data(), end);
}

std::vector<ReportAverage> Report::averages() const {
  std::vector<ReportAverage> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ReportAverage& a) { return a.method == row.method; });
    if (it == out.end()) {
      out.push_back({row.method, 0.0, 0.0, 0});
      it = std::prev(out.end());
    }
    it->mse += row.mse;
    it->mae += row.mae;
    ++it->rows;
  }
  for (auto& a : out) {
    a.mse /= static_cast<double>(a.rows);
    a.mae /= static_cast<double>(a.rows);
  }
  return out;
}

std::string Report::to_csv() const {
  std::ostringstream out;
  out << "# errors in normalized units (z-score with train-split statistics)\n";
  out << "# config " << config.dump() << "\n";
  for (const auto& in : inputs) out << "# input " << in.dataset << " " << in.source << " sha1 " << in.sha1 << "\n";
  out << "dataset,horizon,method,mse,mae,w1,w2,alpha_A,alpha_B\n";
  for (const auto& r : rows)
    out << r.dataset << ',' << r.horizon << ',' << to_string(r.method) << ',' << format_double(r.mse) << ','
        << format_double(r.mae) << ',' << optional_cell(r.w1) << ',' << optional_cell(r.w2) << ','
        << optional_cell(r.alpha_a) << ',' << optional_cell(r.alpha_b) << '\n';
  for (const auto& a : averages())
    out << "average,," << to_string(a.method) << ',' << format_double(a.mse) << ',' << format_double(a.mae)
        << ",,,,\n";
  return out.str();
}

std::string Report::to_json_text() const {
  json j;
  j["units"] = "normalized";
  j["config"] = config;
  json ins = json::array();
  for (const auto& in : inputs) ins.push_back({{"dataset", in.dataset}, {"source", in.source}, {"sha1", in.sha1}});
  j["inputs"] = std::move(ins);
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"dataset", r.dataset},
                  {"horizon", r.horizon},
                  {"method", to_string(r.method)},
                  {"mse", r.mse},
                  {"mae", r.mae},
                  {"w1", optional_json(r.w1)},
                  {"w2", optional_json(r.w2)},
                  {"alpha_A", optional_json(r.alpha_a)},
                  {"alpha_B", optional_json(r.alpha_b)}});
  j["rows"] = std::move(rs);
  json avg = json::array();
  for (const auto& a : averages())
    avg.push_back({{"method", to_string(a.method)}, {"mse", a.mse}, {"mae", a.mae}, {"rows", a.rows}});
  j["averages"] = std::move(avg);
  return j.dump(2) + "\n";
}

Report Report::from_json_text(std::string_view text) {
  Report report;
  try {
    const json j = json::parse(text);
    report.config = j.value("config", json::object());
    for (const auto& in : j.value("inputs", json::array()))
      report.inputs.push_back({in.at("dataset").get<std::string>(), in.at("source").get<std::string>(),
                               in.at("sha1").get<std::string>()});
    for (const auto& r : j.at("rows"))
      report.rows.push_back({r.at("dataset").get<std::string>(), r.at("horizon").get<std::size_t>(),
                             parse_method(r.at("method").get<std::string>()), r.at("mse").get<double>(),
                             r.at("mae").get<double>(), optional_from(r, "w1"), optional_from(r, "w2"),
                             optional_from(r, "alpha_A"), optional_from(r, "alpha_B")});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string Report::render_table() const {
  std::vector<Method> methods;
  std::vector<std::pair<std::string, std::size_t>> keys;
  std::map<std::tuple<std::string, std::size_t, Method>, const ReportRow*> cells;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    const std::pair key{r.dataset, r.horizon};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
    cells[{r.dataset, r.horizon, r.method}] = &r;
  }
  std::sort(methods.begin(), methods.end());

  auto pair_cell = [](double mse, double mae) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f / %.3f", mse, mae);
    return std::string(buf);
  };
  auto pad = [](std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
  };

  std::ostringstream out;
  out << pad("dataset", 14) << pad("H", 6);
  for (const Method m : methods) out << pad(std::string(to_string(m)) + " (MSE / MAE)", 26);
  out << "\n";
  for (const auto& [dataset, horizon] : keys) {
    out << pad(dataset, 14) << pad(std::to_string(horizon), 6);
    for (const Method m : methods) {
      const auto it = cells.find({dataset, horizon, m});
      out << pad(it == cells.end() ? "-" : pair_cell(it->second->mse, it->second->mae), 26);
    }
    out << "\n";
  }
  const auto avgs = averages();
  out << pad("Average", 20);
  for (const Method m : methods) {
    const auto it = std::find_if(avgs.begin(), avgs.end(), [&](const ReportAverage& a) { return a.method == m; });
    out << pad(pair_cell(it->mse, it->mae), 26);
  }
  out << "\n";
  return out.str();
}

std::string git_blob_sha1(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoError("cannot allocate a digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

} // namespace tsvforge
