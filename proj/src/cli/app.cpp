#include "bla/cli/app.hpp"

#include <ostream>

#include "CLI11.hpp"
#include "bla/error.hpp"

namespace bla::cli {
namespace {

struct Flags {
  std::string config, out, data, model, scores, k_grid, subset;
  std::optional<std::uint64_t> seed;
  std::optional<double> k, threshold;
  bool force = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON run config; flags override its values");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--data", f.data, "Directory with activity/dynamic/static/labels CSVs and schema.json");
  cmd->add_flag("--force", f.force, "Overwrite existing outputs");
}

RunConfig resolve(const Flags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  if (f.seed) c.seed = f.seed;
  if (!f.out.empty()) c.out = f.out;
  if (!f.data.empty()) c.data = f.data;
  if (!f.model.empty()) c.model = f.model;
  if (!f.scores.empty()) c.scores = f.scores;
  if (!f.subset.empty()) c.subset = f.subset;
  if (f.k) c.k = f.k;
  if (!f.k_grid.empty()) c.k_grid = parse_k_grid(f.k_grid);
  if (f.threshold) c.threshold = *f.threshold;
  c.force = c.force || f.force;
  return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blended-learning attrition prediction", "bla"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags f;

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic cohort as CSVs");
  add_common(synth, f);

  CLI::App* train = app.add_subcommand("train", "Fit the network, optionally tuning k on a grid");
  add_common(train, f);
  train->add_option("--k", f.k, "Decay speed k in (0, 1]; 0 trains on the target snapshot only");
  train->add_option("--k-grid", f.k_grid, "Comma-separated k values to tune over");

  CLI::App* predict = app.add_subcommand("predict", "Score users with a checkpoint");
  add_common(predict, f);
  predict->add_option("--model", f.model, "Checkpoint written by train");
  predict->add_option("--subset", f.subset, "all, train, valid or test");

  CLI::App* evaluate = app.add_subcommand("eval", "Metrics of scores against target labels");
  add_common(evaluate, f);
  evaluate->add_option("--scores", f.scores, "scores.csv written by predict");
  evaluate->add_option("--threshold", f.threshold, "Decision threshold for F1 and MCC");

  CLI::App* explain = app.add_subcommand("explain", "Cohort saliency heatmaps");
  add_common(explain, f);
  explain->add_option("--model", f.model, "Checkpoint written by train");
  explain->add_option("--subset", f.subset, "all, train, valid or test");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 2;
  }

  try {
    const RunConfig config = resolve(f);
    if (synth->parsed()) {
      RunConfig c = config;
      c.has_synthetic = true;
      cmd_synth(c, out);
    } else if (train->parsed()) {
      cmd_train(config, out);
    } else if (predict->parsed()) {
      cmd_predict(config, out);
    } else if (evaluate->parsed()) {
      cmd_eval(config, out);
    } else {
      cmd_explain(config, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace bla::cli
