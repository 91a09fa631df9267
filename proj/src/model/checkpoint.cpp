#include "bla/model/checkpoint.hpp"

#include <fstream>

#include "bla/error.hpp"

namespace bla::model {

using nlohmann::json;

json config_to_json(const BlaConfig& c) {
  return {{"observation_days", c.observation_days}, {"window_days", c.window_days},
          {"metrics", c.metrics},                   {"dynamic_width", c.dynamic_width},
          {"static_width", c.static_width},         {"conv_kernels", c.conv_kernels},
          {"conv_window", c.conv_window},           {"conv_stride", c.conv_stride},
          {"lstm_units", c.lstm_units},             {"dynamic_hidden", c.dynamic_hidden},
          {"static_hidden", c.static_hidden},       {"fusion_hidden", c.fusion_hidden}};
}

BlaConfig config_from_json(const json& j) {
  BlaConfig c;
  try {
    c.observation_days = j.at("observation_days").get<std::size_t>();
    c.window_days = j.at("window_days").get<std::size_t>();
    c.metrics = j.at("metrics").get<std::size_t>();
    c.dynamic_width = j.at("dynamic_width").get<std::size_t>();
    c.static_width = j.at("static_width").get<std::size_t>();
    c.conv_kernels = j.value("conv_kernels", c.conv_kernels);
    c.conv_window = j.value("conv_window", c.conv_window);
    c.conv_stride = j.value("conv_stride", c.conv_stride);
    c.lstm_units = j.value("lstm_units", c.lstm_units);
    c.dynamic_hidden = j.value("dynamic_hidden", c.dynamic_hidden);
    c.static_hidden = j.value("static_hidden", c.static_hidden);
    c.fusion_hidden = j.value("fusion_hidden", c.fusion_hidden);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model config: ") + e.what());
  }
  return c;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
  json params = json::array();
  ckpt.params.for_each([&](const std::string& name, const Param& p) {
    params.push_back({{"name", name},
                      {"shape", p.value.shape()},
                      {"values", std::vector<double>(p.value.data().begin(), p.value.data().end())}});
  });
  json j = {{"version", kCheckpointVersion}, {"config", config_to_json(ckpt.config)}, {"params", params}};
  j["decay_k"] = ckpt.decay_k ? json(*ckpt.decay_k) : json(nullptr);
  j["metadata"] = ckpt.metadata;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(j.at("config"));
    ckpt.config.validate();
    ckpt.params = make_params(ckpt.config);
    std::map<std::string, const json*> stored;
    for (const json& p : j.at("params")) stored[p.at("name").get<std::string>()] = &p;
    std::size_t used = 0;
    ckpt.params.for_each([&](const std::string& name, Param& p) {
      const auto it = stored.find(name);
      if (it == stored.end()) throw SchemaError("checkpoint lacks parameter " + name);
      const Shape shape = it->second->at("shape").get<Shape>();
      if (shape != p.value.shape()) {
        throw SchemaError("parameter " + name + " has shape " + shape_string(shape) + ", config implies " +
                          shape_string(p.value.shape()));
      }
      p.value = Tensor(shape, it->second->at("values").get<std::vector<double>>());
      p.grad = Tensor(shape);
      ++used;
    });
    if (used != stored.size()) throw SchemaError("checkpoint holds parameters the config does not define");
    if (j.contains("decay_k") && !j.at("decay_k").is_null()) ckpt.decay_k = j.at("decay_k").get<double>();
    if (j.contains("metadata")) ckpt.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return ckpt;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("checkpoint " + path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace bla::model
