#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "bla/cli/app.hpp"
#include "bla/datapipe/csv.hpp"
#include "bla/datapipe/ingest.hpp"
#include "bla/error.hpp"
#include "bla/eval/metrics.hpp"
#include "bla/model/checkpoint.hpp"

namespace bla::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct LoadedData {
  data::SnapshotFrame frame;
  data::Schema schema;
};

class Stopwatch {
 public:
  void lap(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    timings_[stage] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  const json& timings() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  json timings_ = json::object();
};

void prepare_outputs(const fs::path& dir, const std::vector<std::string>& files, bool force) {
  for (const std::string& f : files) {
    if (fs::exists(dir / f) && !force) {
      throw ConfigError((dir / f).string() + " already exists; pass --force to overwrite");
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& config,
                    const Stopwatch& clock, json metrics, const std::vector<std::string>& outputs,
                    const fs::path& checkpoint = {}) {
  json j = {{"command", command},
            {"version", kVersion},
            {"config", to_json(config)},
            {"timings_seconds", clock.timings()},
            {"metrics", std::move(metrics)},
            {"outputs", outputs}};
  if (!checkpoint.empty()) j["checkpoint"] = checkpoint.string();
  const fs::path target = dir / ("manifest_" + command + ".json");
  const fs::path staging = dir / ("manifest_" + command + ".json.tmp");
  {
    std::ofstream out(staging);
    if (!out) throw IoError("cannot write " + staging.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + staging.string());
  }
  std::error_code ec;
  fs::rename(staging, target, ec);
  if (ec) throw IoError("cannot move manifest into place: " + ec.message());
}

LoadedData load_data(const RunConfig& config) {
  if (!config.data.empty()) {
    const data::FramePaths paths = data::FramePaths::in(config.data);
    data::Schema schema = data::load_schema(paths.schema);
    data::SnapshotFrame frame = data::load_frame(paths, schema);
    return {std::move(frame), std::move(schema)};
  }
  if (config.has_synthetic) {
    data::SyntheticCohort cohort = data::generate_synthetic_cohort(config.synthetic, config.require_seed());
    return {std::move(cohort.frame), std::move(cohort.schema)};
  }
  throw ConfigError("no input data: pass --data DIR or give a \"synthetic\" section");
}

/// Rows of `subset` under the split recorded at training time.
std::vector<std::size_t> subset_rows(const data::SnapshotFrame& frame, const std::string& subset,
                                     const model::Checkpoint& ckpt) {
  std::vector<std::size_t> all(frame.size());
  std::iota(all.begin(), all.end(), 0);
  if (subset == "all") return all;
  if (subset != "train" && subset != "valid" && subset != "test") {
    throw ConfigError("subset must be all, train, valid or test (got '" + subset + "')");
  }
  const auto seed = ckpt.metadata.find("split_seed");
  if (seed == ckpt.metadata.end()) throw ConfigError("checkpoint records no split; use --subset all");
  const data::SplitRatios ratios{std::stod(ckpt.metadata.at("split_train")),
                                 std::stod(ckpt.metadata.at("split_valid")),
                                 std::stod(ckpt.metadata.at("split_test"))};
  const std::vector<double> strata = frame.target_labels();
  const data::SplitIndices split = data::stratified_split(strata, ratios, std::stoull(seed->second));
  return subset == "train" ? split.train : subset == "valid" ? split.valid : split.test;
}

model::Checkpoint load_model(const RunConfig& config) {
  if (config.model.empty()) throw ConfigError("no checkpoint: pass --model FILE");
  return model::load_checkpoint(config.model);
}

json metrics_json(const eval::MetricReport& report) {
  json j = json::object();
  for (const auto& [name, value] : report.rows()) j[name] = value;
  return j;
}

}  // namespace

void cmd_synth(RunConfig config, std::ostream& log) {
  Stopwatch clock;
  const std::vector<std::string> files{"activity.csv", "dynamic.csv", "static.csv", "labels.csv", "schema.json"};
  prepare_outputs(config.out, files, config.force);
  const data::SyntheticCohort cohort = data::generate_synthetic_cohort(config.synthetic, config.require_seed());
  data::write_frame(cohort.frame, cohort.schema, data::FramePaths::in(config.out));
  log << "synth: " << cohort.frame.size() << " users, C=" << cohort.frame.snapshots() << " -> "
      << config.out.string() << '\n';
}

void cmd_train(RunConfig config, std::ostream& log) {
  Stopwatch clock;
  const std::uint64_t seed = config.require_seed();
  config.train.seed = seed;
  std::vector<std::string> files{"model.json", "history.csv", "manifest_train.json"};
  if (!config.k_grid.empty()) files.push_back("k_tuning.csv");
  prepare_outputs(config.out, files, config.force);

  const LoadedData loaded = load_data(config);
  const data::SnapshotFrame& frame = loaded.frame;
  std::size_t positives = 0, records = 0;
  const std::size_t last = frame.snapshots() - 1;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.masks.at(i, last) == 0.0) continue;
    ++records;
    positives += frame.labels.at(i, last) == 1.0;
  }
  if (positives == 0 || positives == records) {
    throw ContractError("training labels are single-class (" + std::to_string(positives) + " of " +
                        std::to_string(records) + " target records positive)");
  }
  const data::FrameSplit split = data::split_frame(frame, config.split, seed);
  model::BlaConfig arch = config.architecture;
  const model::BlaConfig geometry = model::BlaConfig::for_frame(frame);
  arch.observation_days = geometry.observation_days;
  arch.window_days = geometry.window_days;
  arch.metrics = geometry.metrics;
  arch.dynamic_width = geometry.dynamic_width;
  arch.static_width = geometry.static_width;
  arch.validate();
  clock.lap("load");

  train::FitResult fit;
  double k = config.decay_k();
  json metrics = json::object();
  if (!config.k_grid.empty()) {
    train::DecayTuning tuning = train::tune_decay_k(split.train, split.valid, arch, config.train, config.k_grid);
    k = tuning.best_k;
    fit = std::move(tuning.best_fit);
    std::ofstream out = data::open_output(config.out / "k_tuning.csv");
    out << "k,valid_loss\n";
    for (std::size_t g = 0; g < tuning.grid.size(); ++g) {
      out << data::format_real(tuning.grid[g]) << ',' << data::format_real(tuning.valid_losses[g]) << '\n';
      log << "k=" << tuning.grid[g] << " valid_loss=" << tuning.valid_losses[g] << '\n';
    }
    if (!out) throw IoError("failed writing k_tuning.csv");
  } else {
    fit = train::fit(split.train, split.valid, arch, config.train, k);
  }
  clock.lap("fit");

  config.k = k;
  model::Checkpoint ckpt{arch, fit.params, k,
                         {{"seed", std::to_string(seed)},
                          {"split_seed", std::to_string(seed)},
                          {"split_train", data::format_real(config.split.train)},
                          {"split_valid", data::format_real(config.split.valid)},
                          {"split_test", data::format_real(config.split.test)}}};
  const fs::path ckpt_path = config.out / "model.json";
  model::save_checkpoint(ckpt, ckpt_path);
  train::write_history(fit.history, config.out / "history.csv");

  metrics["k"] = k;
  metrics["best_epoch"] = fit.best_epoch;
  metrics["epochs_run"] = fit.history.size();
  metrics["best_valid_loss"] = fit.best_valid_loss;
  const std::vector<double> test_scores = model::predict(split.test, fit.params, arch);
  eval::ScoredSet test_set{test_scores, split.test.target_labels()};
  std::vector<double> scores, labels;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    if (split.test.masks.at(i, last) == 0.0) continue;
    scores.push_back(test_set.scores[i]);
    labels.push_back(test_set.labels[i]);
  }
  const eval::ScoredSet held_out{scores, labels};
  if (held_out.positives() > 0 && held_out.positives() < held_out.size()) {
    metrics["test_auc_roc"] = eval::roc_auc(held_out);
  }
  clock.lap("report");
  write_manifest(config.out, "train", config, clock, metrics, files, ckpt_path);
  log << "train: k=" << k << " best_epoch=" << fit.best_epoch << " best_valid_loss=" << fit.best_valid_loss;
  if (metrics.contains("test_auc_roc")) log << " test_auc_roc=" << metrics["test_auc_roc"].get<double>();
  log << '\n';
}

void cmd_predict(RunConfig config, std::ostream& log) {
  Stopwatch clock;
  const std::vector<std::string> files{"scores.csv", "manifest_predict.json"};
  prepare_outputs(config.out, files, config.force);
  const model::Checkpoint ckpt = load_model(config);
  const LoadedData loaded = load_data(config);
  model::check_compatible(ckpt.config, loaded.frame);
  const data::SnapshotFrame frame = data::subset(loaded.frame, subset_rows(loaded.frame, config.subset, ckpt));
  clock.lap("load");
  const std::vector<double> probs = model::predict(frame, ckpt.params, ckpt.config);
  clock.lap("predict");

  std::ofstream out = data::open_output(config.out / "scores.csv");
  out << "user_id,probability\n";
  for (std::size_t i = 0; i < frame.size(); ++i) out << frame.user_ids[i] << ',' << data::format_real(probs[i]) << '\n';
  if (!out) throw IoError("failed writing scores.csv");
  write_manifest(config.out, "predict", config, clock, {{"users", frame.size()}}, files, config.model);
  log << "predict: " << frame.size() << " users -> " << (config.out / "scores.csv").string() << '\n';
}

void cmd_eval(RunConfig config, std::ostream& log) {
  Stopwatch clock;
  const std::vector<std::string> files{"metrics.csv", "roc_curve.csv", "pr_curve.csv", "manifest_eval.json"};
  prepare_outputs(config.out, files, config.force);
  if (config.scores.empty()) throw ConfigError("no scores: pass --scores FILE");
  const LoadedData loaded = load_data(config);
  const data::SnapshotFrame& frame = loaded.frame;
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < frame.size(); ++i) row_of[frame.user_ids[i]] = i;

  data::CsvReader reader(config.scores);
  if (reader.header() != std::vector<std::string>{"user_id", "probability"}) {
    throw ParseError(config.scores.string() + ": expected header user_id,probability");
  }
  const std::size_t last = frame.snapshots() - 1;
  eval::ScoredSet set;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != 2) throw ParseError(config.scores.string() + " line " + std::to_string(reader.line()));
    const auto it = row_of.find(fields[0]);
    if (it == row_of.end()) throw ContractError("scored user " + fields[0] + " is not in the data");
    if (frame.masks.at(it->second, last) == 0.0) continue;
    set.scores.push_back(data::parse_real(fields[1], config.scores.string()));
    set.labels.push_back(frame.labels.at(it->second, last));
  }
  clock.lap("load");
  const eval::MetricReport report = eval::evaluate(set, config.threshold, config.minority_positive);
  const eval::ScoredSet& curve_set = config.minority_positive && report.positives != set.positives()
                                         ? eval::flip_classes(set)
                                         : set;
  eval::write_metrics(report, config.out / "metrics.csv");
  eval::write_roc_curve(eval::roc_curve(curve_set), config.out / "roc_curve.csv");
  eval::write_pr_curve(eval::pr_curve(curve_set), config.out / "pr_curve.csv");
  clock.lap("metrics");
  write_manifest(config.out, "eval", config, clock, metrics_json(report), files);
  log << "eval: auc_roc=" << report.roc_auc << " auc_pr=" << report.pr_auc << " f1=" << report.f1
      << " mcc=" << report.mcc << '\n';
}

void cmd_explain(RunConfig config, std::ostream& log) {
  Stopwatch clock;
  const std::vector<std::string> files{"activity_importance.csv", "dynamic_importance.csv", "static_importance.csv",
                                       "manifest_explain.json"};
  prepare_outputs(config.out, files, config.force);
  const model::Checkpoint ckpt = load_model(config);
  const LoadedData loaded = load_data(config);
  model::check_compatible(ckpt.config, loaded.frame);
  const data::SnapshotFrame frame = data::subset(loaded.frame, subset_rows(loaded.frame, config.subset, ckpt));
  clock.lap("load");
  explain::SaliencyOptions options;
  options.target = config.saliency_target;
  options.max_users = config.explain_max_users;
  const std::vector<explain::SaliencyMap> maps = explain::saliency(frame, ckpt.params, ckpt.config, options);
  const explain::CohortSaliency cohort = explain::aggregate(maps);
  clock.lap("saliency");
  explain::export_cohort(cohort, loaded.schema.dynamic_encoder().slot_names(),
                         loaded.schema.static_encoder().slot_names(), config.out);
  write_manifest(config.out, "explain", config, clock, {{"users", maps.size()}}, files, config.model);
  log << "explain: " << maps.size() << " users -> " << config.out.string() << '\n';
}

}  // namespace bla::cli
