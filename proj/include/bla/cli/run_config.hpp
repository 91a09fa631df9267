#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "bla/datapipe/split.hpp"
#include "bla/datapipe/synthetic.hpp"
#include "bla/explain/saliency.hpp"
#include "bla/model/config.hpp"
#include "bla/training/trainer.hpp"

namespace bla::cli {

/// Everything a command needs. Resolution order: built-in defaults, then the
/// JSON file given by --config, then command-line flags.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = ".";
  std::filesystem::path data;    // directory with the four CSVs and schema.json
  std::filesystem::path model;   // checkpoint for predict / explain
  std::filesystem::path scores;  // scores.csv for eval
  data::SyntheticSpec synthetic;
  bool has_synthetic = false;

  model::BlaConfig architecture;  // geometry fields are taken from the data
  train::TrainConfig train;
  std::optional<double> k;
  std::vector<double> k_grid;
  data::SplitRatios split;
  std::string subset = "all";  // all | train | valid | test

  double threshold = 0.5;
  bool minority_positive = false;
  explain::SaliencyTarget saliency_target = explain::SaliencyTarget::kProbability;
  std::size_t explain_max_users = 0;

  bool force = false;

  /// Throws ConfigError when no seed was given.
  std::uint64_t require_seed() const;
  /// k if given, else 1.
  double decay_k() const { return k.value_or(1.0); }
};

/// Overlays the keys of `j` onto `config`. Unknown keys are a ConfigError.
void apply_json(RunConfig& config, const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Parses "0.1,0.5,1" (RangeError on values outside [0, 1]).
std::vector<double> parse_k_grid(const std::string& text);

}  // namespace bla::cli
