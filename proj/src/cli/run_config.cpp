#include "bla/cli/run_config.hpp"

#include <fstream>
#include <set>

#include "bla/datapipe/csv.hpp"
#include "bla/error.hpp"

namespace bla::cli {
namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

void apply_synthetic(data::SyntheticSpec& s, const json& j) {
  check_keys(j,
             {"users", "observation_days", "window_days", "metrics", "gamma", "prevalence", "signal_strength",
              "activity_weight", "dynamic_weight", "static_weight", "guidance_weight", "nonlinearity",
              "pattern_decay", "activity_memory", "burst_days", "burst_amplitude", "daily_noise", "late_registration_rate",
              "city_levels"},
             "synthetic");
  read(j, "users", s.users);
  read(j, "observation_days", s.observation_days);
  read(j, "window_days", s.window_days);
  read(j, "metrics", s.metrics);
  read(j, "gamma", s.gamma);
  read(j, "prevalence", s.prevalence);
  read(j, "signal_strength", s.signal_strength);
  read(j, "activity_weight", s.activity_weight);
  read(j, "dynamic_weight", s.dynamic_weight);
  read(j, "static_weight", s.static_weight);
  read(j, "guidance_weight", s.guidance_weight);
  read(j, "nonlinearity", s.nonlinearity);
  read(j, "pattern_decay", s.pattern_decay);
  read(j, "activity_memory", s.activity_memory);
  read(j, "burst_days", s.burst_days);
  read(j, "burst_amplitude", s.burst_amplitude);
  read(j, "daily_noise", s.daily_noise);
  read(j, "late_registration_rate", s.late_registration_rate);
  read(j, "city_levels", s.city_levels);
}

json synthetic_json(const data::SyntheticSpec& s) {
  return {{"users", s.users},
          {"observation_days", s.observation_days},
          {"window_days", s.window_days},
          {"metrics", s.metrics},
          {"gamma", s.gamma},
          {"prevalence", s.prevalence},
          {"signal_strength", s.signal_strength},
          {"activity_weight", s.activity_weight},
          {"dynamic_weight", s.dynamic_weight},
          {"static_weight", s.static_weight},
          {"guidance_weight", s.guidance_weight},
          {"nonlinearity", s.nonlinearity},
          {"pattern_decay", s.pattern_decay},
          {"activity_memory", s.activity_memory},
          {"burst_days", s.burst_days},
          {"burst_amplitude", s.burst_amplitude},
          {"daily_noise", s.daily_noise},
          {"late_registration_rate", s.late_registration_rate},
          {"city_levels", s.city_levels}};
}

void apply_architecture(model::BlaConfig& a, const json& j) {
  check_keys(j,
             {"conv_kernels", "conv_window", "conv_stride", "lstm_units", "dynamic_hidden", "static_hidden",
              "fusion_hidden"},
             "architecture");
  read(j, "conv_kernels", a.conv_kernels);
  read(j, "conv_window", a.conv_window);
  read(j, "conv_stride", a.conv_stride);
  read(j, "lstm_units", a.lstm_units);
  read(j, "dynamic_hidden", a.dynamic_hidden);
  read(j, "static_hidden", a.static_hidden);
  read(j, "fusion_hidden", a.fusion_hidden);
}

void apply_train(train::TrainConfig& t, const json& j) {
  check_keys(j,
             {"batch_size", "max_epochs", "patience", "learning_rate", "lr_decay", "beta1", "beta2", "epsilon",
              "intention_guidance", "target_only"},
             "train");
  read(j, "batch_size", t.batch_size);
  read(j, "max_epochs", t.max_epochs);
  read(j, "patience", t.patience);
  read(j, "learning_rate", t.learning_rate);
  read(j, "lr_decay", t.lr_decay);
  read(j, "beta1", t.adam.beta1);
  read(j, "beta2", t.adam.beta2);
  read(j, "epsilon", t.adam.epsilon);
  read(j, "intention_guidance", t.intention_guidance);
  read(j, "target_only", t.target_only);
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required (--seed or \"seed\" in the config file)");
  return *seed;
}

void apply_json(RunConfig& c, const json& j) {
  check_keys(j,
             {"seed", "out", "data", "model", "scores", "synthetic", "architecture", "train", "k", "k_grid", "split",
              "subset", "threshold", "minority_positive", "explain"},
             "run config");
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("data")) c.data = j.at("data").get<std::string>();
    if (j.contains("model")) c.model = j.at("model").get<std::string>();
    if (j.contains("scores")) c.scores = j.at("scores").get<std::string>();
    if (j.contains("synthetic")) {
      apply_synthetic(c.synthetic, j.at("synthetic"));
      c.has_synthetic = true;
    }
    if (j.contains("architecture")) apply_architecture(c.architecture, j.at("architecture"));
    if (j.contains("train")) apply_train(c.train, j.at("train"));
    if (j.contains("k")) c.k = j.at("k").get<double>();
    read(j, "k_grid", c.k_grid);
    if (j.contains("split")) {
      check_keys(j.at("split"), {"train", "valid", "test"}, "split");
      read(j.at("split"), "train", c.split.train);
      read(j.at("split"), "valid", c.split.valid);
      read(j.at("split"), "test", c.split.test);
    }
    read(j, "subset", c.subset);
    read(j, "threshold", c.threshold);
    read(j, "minority_positive", c.minority_positive);
    if (j.contains("explain")) {
      const json& e = j.at("explain");
      check_keys(e, {"target", "max_users"}, "explain");
      if (e.contains("target")) {
        const std::string target = e.at("target").get<std::string>();
        if (target == "probability") {
          c.saliency_target = explain::SaliencyTarget::kProbability;
        } else if (target == "logit") {
          c.saliency_target = explain::SaliencyTarget::kLogit;
        } else {
          throw ConfigError("explain.target must be 'probability' or 'logit'");
        }
      }
      read(e, "max_users", c.explain_max_users);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  apply_json(c, j);
  return c;
}

json to_json(const RunConfig& c) {
  const model::BlaConfig& a = c.architecture;
  const train::TrainConfig& t = c.train;
  json j = {
      {"out", c.out.string()},
      {"data", c.data.string()},
      {"model", c.model.string()},
      {"scores", c.scores.string()},
      {"architecture",
       {{"conv_kernels", a.conv_kernels},
        {"conv_window", a.conv_window},
        {"conv_stride", a.conv_stride},
        {"lstm_units", a.lstm_units},
        {"dynamic_hidden", a.dynamic_hidden},
        {"static_hidden", a.static_hidden},
        {"fusion_hidden", a.fusion_hidden}}},
      {"train",
       {{"batch_size", t.batch_size},
        {"max_epochs", t.max_epochs},
        {"patience", t.patience},
        {"learning_rate", t.learning_rate},
        {"lr_decay", t.lr_decay},
        {"beta1", t.adam.beta1},
        {"beta2", t.adam.beta2},
        {"epsilon", t.adam.epsilon},
        {"intention_guidance", t.intention_guidance},
        {"target_only", t.target_only}}},
      {"k_grid", c.k_grid},
      {"split", {{"train", c.split.train}, {"valid", c.split.valid}, {"test", c.split.test}}},
      {"subset", c.subset},
      {"threshold", c.threshold},
      {"minority_positive", c.minority_positive},
      {"explain",
       {{"target", c.saliency_target == explain::SaliencyTarget::kLogit ? "logit" : "probability"},
        {"max_users", c.explain_max_users}}}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.k) j["k"] = *c.k;
  if (c.has_synthetic) j["synthetic"] = synthetic_json(c.synthetic);
  return j;
}

std::vector<double> parse_k_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const std::size_t end = std::min(text.find(',', begin), text.size());
    const std::string item = text.substr(begin, end - begin);
    if (item.empty()) throw ParseError("empty entry in k grid '" + text + "'");
    const double k = data::parse_real(item, "k grid");
    if (!(k >= 0.0 && k <= 1.0)) throw RangeError("k grid values must lie in [0, 1], got " + item);
    grid.push_back(k);
    begin = end + 1;
  }
  return grid;
}

}  // namespace bla::cli
