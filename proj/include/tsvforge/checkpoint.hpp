#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsvforge/encoder.hpp"
#include "tsvforge/tensor.hpp"

namespace tsvforge {

inline constexpr std::string_view kCheckpointFormat = "tsvforge.ckpt.v1";

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// JSON container of named tensors:
/// {"format": "tsvforge.ckpt.v1", "kind": ..., "meta": {...},
///  "tensors": [{"name": ..., "shape": [...], "data": [...]}, ...]}
/// Doubles are written with round-trip precision, so save/load is exact.
struct Checkpoint {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  const Tensor& get(std::string_view name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

Checkpoint encoder_checkpoint(const EncoderConfig& config, const EncoderParams& params,
                              nlohmann::json meta = nlohmann::json::object());
std::pair<EncoderConfig, EncoderParams> encoder_from_checkpoint(const Checkpoint& ckpt);

} // namespace tsvforge
