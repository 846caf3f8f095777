#include "tsvforge/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "tsvforge/error.hpp"

namespace tsvforge {

using nlohmann::json;

const Tensor& Checkpoint::get(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.value;
  throw LookupError("checkpoint has no tensor named '" + std::string(name) + "'");
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json j;
  j["format"] = kCheckpointFormat;
  j["kind"] = ckpt.kind;
  j["meta"] = ckpt.meta;
  json tensors = json::array();
  for (const auto& t : ckpt.tensors)
    tensors.push_back({{"name", t.name}, {"shape", t.value.shape()}, {"data", t.value.storage()}});
  j["tensors"] = std::move(tensors);
  return j.dump() + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.contains("format") || j["format"] != kCheckpointFormat)
    throw DataError("unsupported checkpoint format (expected " + std::string(kCheckpointFormat) + ")");
  Checkpoint ckpt;
  try {
    ckpt.kind = j.at("kind").get<std::string>();
    ckpt.meta = j.value("meta", json::object());
    for (const auto& t : j.at("tensors"))
      ckpt.tensors.push_back({t.at("name").get<std::string>(),
                              Tensor(t.at("shape").get<Shape>(), t.at("data").get<std::vector<double>>())});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(ckpt);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

json to_json(const EncoderConfig& c) {
  return {{"input_dim", c.input_dim},   {"hidden_dim", c.hidden_dim},     {"output_dim", c.output_dim},
          {"depth", c.depth},           {"kernel_width", c.kernel_width}, {"mask_prob", c.mask_prob}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig c;
  c.input_dim = j.value("input_dim", c.input_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.output_dim = j.value("output_dim", c.output_dim);
  c.depth = j.value("depth", c.depth);
  c.kernel_width = j.value("kernel_width", c.kernel_width);
  c.mask_prob = j.value("mask_prob", c.mask_prob);
  c.validate();
  return c;
}

Checkpoint encoder_checkpoint(const EncoderConfig& config, const EncoderParams& params, json meta) {
  Checkpoint ckpt{"encoder", std::move(meta), {}};
  ckpt.meta["encoder"] = to_json(config);
  for (const auto& [name, t] : params.named()) ckpt.tensors.push_back({name, *t});
  return ckpt;
}

std::pair<EncoderConfig, EncoderParams> encoder_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "encoder") throw DataError("checkpoint kind is '" + ckpt.kind + "', expected 'encoder'");
  if (!ckpt.meta.contains("encoder")) throw DataError("encoder checkpoint lacks its config");
  const EncoderConfig config = encoder_config_from_json(ckpt.meta["encoder"]);
  EncoderParams params = EncoderParams::initialize(config, 0);
  for (auto& [name, t] : params.named()) {
    const Tensor& stored = ckpt.get(name);
    if (stored.shape() != t->shape())
      throw DimensionError("checkpoint tensor '" + name + "' has shape " + to_string(stored.shape()) +
                           ", expected " + to_string(t->shape()));
    *t = stored;
  }
  return {config, std::move(params)};
}

} // namespace tsvforge
