#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "bla/model/config.hpp"
#include "bla/model/params.hpp"

namespace bla::model {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  BlaConfig config;
  BlaParams params;
  std::optional<double> decay_k;
  std::map<std::string, std::string> metadata;
};

nlohmann::json config_to_json(const BlaConfig& config);
BlaConfig config_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
/// Throws SchemaError on a wrong version, a missing parameter or a shape mismatch.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Values round-trip bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bla::model
