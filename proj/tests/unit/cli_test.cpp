#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "bla/cli/app.hpp"
#include "bla/datapipe/csv.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace bla::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out, err;
};

Result bla(std::vector<std::string> args) {
  args.insert(args.begin(), "bla");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string small_config(const testing::TempDir& dir, std::size_t metrics = 3, std::size_t epochs = 25) {
  const fs::path path = dir / ("config_" + std::to_string(metrics) + ".json");
  testing::write_text(path, R"({"seed": 3,
    "synthetic": {"users": 300, "observation_days": 40, "window_days": 10, "metrics": )" +
                                std::to_string(metrics) + R"(},
    "architecture": {"conv_kernels": 6, "lstm_units": [12, 8], "dynamic_hidden": [8], "static_hidden": [8],
                     "fusion_hidden": [8]},
    "train": {"max_epochs": )" + std::to_string(epochs) +
                                R"(, "patience": 8, "batch_size": 64, "learning_rate": 0.01}})");
  return path.string();
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(testing::read_text(path)); }

class CliTest : public ::testing::Test {
 protected:
  testing::TempDir dir;
  std::string config = small_config(dir);

  std::string p(const std::string& name) const { return (dir / name).string(); }

  void pipeline(const std::string& tag) {
    ASSERT_EQ(bla({"synth", "--config", config, "--out", p(tag + "data")}).code, 0);
    ASSERT_EQ(bla({"train", "--config", config, "--data", p(tag + "data"), "--out", p(tag + "model")}).code, 0);
    ASSERT_EQ(bla({"predict", "--data", p(tag + "data"), "--model", p(tag + "model/model.json"), "--out",
                   p(tag + "pred"), "--subset", "test"})
                  .code,
              0);
    ASSERT_EQ(bla({"eval", "--data", p(tag + "data"), "--scores", p(tag + "pred/scores.csv"), "--out",
                   p(tag + "eval")})
                  .code,
              0);
  }
};

TEST_F(CliTest, SynthWritesFiveDeterministicFiles) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("a")}).code, 0);
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("b")}).code, 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    ++files;
    const std::string name = entry.path().filename().string();
    EXPECT_EQ(testing::read_text(entry.path()), testing::read_text(dir / "b" / name)) << name;
  }
  EXPECT_EQ(files, 5u);
}

TEST_F(CliTest, SynthPrevalenceMatchesSpec) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("d")}).code, 0);
  data::CsvReader labels(dir / "d" / "labels.csv");
  std::vector<std::string> f;
  double positives = 0, total = 0;
  const std::size_t snap = labels.column("snapshot"), status = labels.column("status");
  while (labels.next(f)) {
    if (f[snap] != "4") continue;
    total += 1;
    positives += f[status] == "1";
  }
  EXPECT_NEAR(positives / total, 0.3, 0.02);
}

TEST_F(CliTest, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("d")}).code, 0);
  const Result again = bla({"synth", "--config", config, "--out", p("d")});
  EXPECT_EQ(again.code, 4);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(bla({"synth", "--config", config, "--out", p("d"), "--force"}).code, 0);
}

TEST_F(CliTest, TrainWithSingleGridPointRecordsK) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("d")}).code, 0);
  const Result r = bla({"train", "--config", small_config(dir, 3, 1), "--data", p("d"), "--out", p("m"),
                        "--k-grid", "1.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto manifest = read_json(dir / "m" / "manifest_train.json");
  EXPECT_EQ(manifest["metrics"]["k"].get<double>(), 1.0);
  EXPECT_EQ(manifest["config"]["k"].get<double>(), 1.0);
  EXPECT_EQ(manifest["checkpoint"].get<std::string>(), (dir / "m" / "model.json").string());
  EXPECT_TRUE(fs::exists(dir / "m" / "k_tuning.csv"));
}

TEST_F(CliTest, RetrainingReproducesCheckpointAndHistoryRespectsPatience) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("d")}).code, 0);
  ASSERT_EQ(bla({"train", "--config", config, "--data", p("d"), "--out", p("m1")}).code, 0);
  ASSERT_EQ(bla({"train", "--config", config, "--data", p("d"), "--out", p("m2")}).code, 0);
  EXPECT_EQ(testing::read_text(dir / "m1" / "model.json"), testing::read_text(dir / "m2" / "model.json"));

  const auto manifest = read_json(dir / "m1" / "manifest_train.json");
  const std::size_t best = manifest["metrics"]["best_epoch"].get<std::size_t>();
  const std::size_t rows = manifest["metrics"]["epochs_run"].get<std::size_t>();
  EXPECT_LE(rows, 25u);
  EXPECT_LE(rows - best, 8u);
  const std::string history = testing::read_text(dir / "m1" / "history.csv");
  EXPECT_EQ(static_cast<std::size_t>(std::count(history.begin(), history.end(), '\n')), rows + 1);
}

TEST_F(CliTest, PipelineIsDeterministicAndSeparatesTrainingUsers) {
  pipeline("r1_");
  pipeline("r2_");
  EXPECT_EQ(testing::read_text(dir / "r1_pred" / "scores.csv"), testing::read_text(dir / "r2_pred" / "scores.csv"));
  EXPECT_EQ(testing::read_text(dir / "r1_eval" / "metrics.csv"), testing::read_text(dir / "r2_eval" / "metrics.csv"));

  ASSERT_EQ(bla({"predict", "--data", p("r1_data"), "--model", p("r1_model/model.json"), "--out", p("tr"),
                 "--subset", "train"})
                .code,
            0);
  ASSERT_EQ(bla({"eval", "--data", p("r1_data"), "--scores", p("tr/scores.csv"), "--out", p("tr_eval")}).code, 0);
  const auto metrics = read_json(dir / "tr_eval" / "manifest_eval.json")["metrics"];
  EXPECT_GE(metrics["auc_roc"].get<double>(), 0.95);
  EXPECT_TRUE(fs::exists(dir / "tr_eval" / "roc_curve.csv"));
  EXPECT_TRUE(fs::exists(dir / "tr_eval" / "pr_curve.csv"));
}

TEST_F(CliTest, ExplainWritesThreeImportanceFiles) {
  pipeline("");
  ASSERT_EQ(bla({"explain", "--data", p("data"), "--model", p("model/model.json"), "--out", p("ex")}).code, 0);
  std::size_t importance = 0;
  for (const auto& entry : fs::directory_iterator(dir / "ex")) {
    importance += entry.path().filename().string().find("_importance.csv") != std::string::npos;
  }
  EXPECT_EQ(importance, 3u);
  const std::string activity = testing::read_text(dir / "ex" / "activity_importance.csv");
  EXPECT_EQ(std::count(activity.begin(), activity.end(), '\n'), 41);
}

TEST_F(CliTest, SchemaMismatchNamesBothShapes) {
  pipeline("");
  ASSERT_EQ(bla({"synth", "--config", small_config(dir, 2), "--out", p("other")}).code, 0);
  const Result r = bla({"predict", "--data", p("other"), "--model", p("model/model.json"), "--out", p("x")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("A=3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("A=2"), std::string::npos) << r.err;
}

TEST_F(CliTest, SingleClassEvalFailsCleanly) {
  pipeline("");
  std::ifstream scores(dir / "pred" / "scores.csv");
  data::CsvReader labels(dir / "data" / "labels.csv");
  std::vector<std::string> f;
  std::set<std::string> negatives;
  while (labels.next(f)) {
    if (f[labels.column("snapshot")] == "4" && f[labels.column("status")] == "0") {
      negatives.insert(f[labels.column("user_id")]);
    }
  }
  std::string line, kept = "user_id,probability\n";
  std::getline(scores, line);
  while (std::getline(scores, line)) {
    if (negatives.contains(line.substr(0, line.find(',')))) kept += line + "\n";
  }
  testing::write_text(dir / "neg.csv", kept);
  const Result r = bla({"eval", "--data", p("data"), "--scores", p("neg.csv"), "--out", p("e2")});
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.err.find("single-class"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExitCodesFollowErrorClass) {
  testing::write_text(dir / "broken.json", "{\"seed\": ");
  EXPECT_EQ(bla({"synth", "--config", p("broken.json"), "--out", p("d")}).code, 2);
  testing::write_text(dir / "typo.json", R"({"seed": 1, "sed": 2})");
  EXPECT_EQ(bla({"synth", "--config", p("typo.json"), "--out", p("d")}).code, 4);
  EXPECT_EQ(bla({"train", "--seed", "1", "--data", p("nowhere"), "--out", p("m")}).code, 5);
  EXPECT_EQ(bla({"frobnicate"}).code, 2);
  EXPECT_EQ(bla({"train", "--k-grid", "0.5,,1", "--seed", "1", "--out", p("m")}).code, 2);
  EXPECT_EQ(bla({"train", "--k-grid", "0.5,1.5", "--seed", "1", "--out", p("m")}).code, 4);
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  ASSERT_EQ(bla({"synth", "--config", config, "--out", p("d")}).code, 0);
  ASSERT_EQ(bla({"train", "--config", small_config(dir, 3, 2), "--data", p("d"), "--out", p("m"), "--seed", "11",
                 "--k", "0.5"})
                .code,
            0);
  const auto manifest = read_json(dir / "m" / "manifest_train.json");
  EXPECT_EQ(manifest["config"]["seed"].get<int>(), 11);
  EXPECT_EQ(manifest["config"]["k"].get<double>(), 0.5);
  EXPECT_EQ(manifest["config"]["train"]["max_epochs"].get<int>(), 2);
  EXPECT_FALSE(fs::exists(dir / "m" / "manifest_train.json.tmp"));
}

}  // namespace
}  // namespace bla::cli
