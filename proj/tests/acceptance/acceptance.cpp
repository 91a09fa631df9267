// End-to-end acceptance run: one PASS/FAIL/SKIPPED line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bla/cli/app.hpp"
#include "bla/datapipe/split.hpp"
#include "bla/datapipe/synthetic.hpp"
#include "bla/diffcore/gradcheck.hpp"
#include "bla/diffcore/ops.hpp"
#include "bla/eval/baseline.hpp"
#include "bla/eval/metrics.hpp"
#include "bla/explain/saliency.hpp"
#include "bla/model/network.hpp"
#include "bla/training/init.hpp"
#include "bla/training/objective.hpp"
#include "bla/training/trainer.hpp"
#include "test_util.hpp"

namespace {

using namespace bla;

struct Outcome {
  enum { kPass, kFail, kSkipped } status = kFail;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::kPass : Outcome::kFail, std::move(detail)}; }

std::string fmt(const char* pattern, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// 1: parameter gradients of the full loss against central differences

Outcome gradient_check() {
  std::mt19937_64 rng(2024);
  data::SnapshotConfig sc{data::parse_date("2017-03-31"), 6, 2};
  data::SnapshotFrame frame = data::make_frame(sc, {"u0", "u1", "u2", "u3"}, 3, 2, 2);
  frame.activity = testing::random_tensor(frame.activity.shape(), rng, 0.0, 2.0);
  frame.dynamic = testing::random_tensor(frame.dynamic.shape(), rng, -1.0, 1.0);
  frame.statics = testing::random_tensor(frame.statics.shape(), rng, -1.0, 1.0);
  for (double& y : frame.labels.data()) y = static_cast<double>(rng() & 1);
  frame.masks = Tensor(frame.masks.shape(), 1.0);
  frame.masks.at(3, 0) = 0.0;
  frame.labels.at(3, 0) = 0.0;

  model::BlaConfig config = model::BlaConfig::for_frame(frame);
  config.conv_kernels = 4;
  config.lstm_units = {6, 5};
  config.dynamic_hidden = {4, 3};
  config.static_hidden = {4, 3};
  config.fusion_hidden = {8, 4};
  model::BlaParams params = model::make_params(config);
  std::uniform_real_distribution<double> dist(-0.6, 0.6);
  params.for_each([&](const std::string&, Param& p) {
    for (double& v : p.value.data()) v = dist(rng);
  });

  const model::Batch batch = model::make_batch(frame, 0, 4);
  const std::vector<double> zeta = train::decay_weights(0.7, config.snapshots());
  auto loss_of = [&](bool attach) {
    Tape tape;
    const auto pv = attach ? model::bind_params(tape, params) : model::bind_params_detached(tape, params, false);
    const model::InputVars in{tape.constant(batch.activity), tape.constant(batch.dynamic),
                              tape.constant(batch.statics), tape.constant(batch.labels)};
    const Var j = train::attrition_loss(model::forward(pv, in, config).probs, batch.labels, batch.masks, zeta, 4.0);
    if (attach) tape.backward(j);
    return j.value()[0];
  };
  params.zero_grad();
  loss_of(true);

  // Central differences at eps = 1e-5 carry ~1e-11 of rounding noise, so the
  // denominator is floored at 1e-7 for near-zero gradients.
  const double eps = 1e-5;
  double worst = 0.0, worst_unfloored = 0.0;
  std::size_t checked = 0;
  std::string worst_name;
  params.for_each([&](const std::string& name, Param& p) {
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const double up = loss_of(false);
      p.value[k] = saved - eps;
      const double down = loss_of(false);
      p.value[k] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = std::abs(p.grad[k] - numeric) / (std::abs(p.grad[k]) + std::abs(numeric) + 1e-7);
      worst_unfloored = std::max(worst_unfloored, relative_error(p.grad[k], numeric));
      if (err > worst) {
        worst = err;
        worst_name = name + "[" + std::to_string(k) + "]";
      }
      ++checked;
    }
  });
  return verdict(worst < 1e-4, fmt("max relative error %.2e at %s over %zu coordinates (%.2e without the floor)",
                                   worst, worst_name.c_str(), checked, worst_unfloored));
}

// ---------------------------------------------------------------------------
// 2: IG-LSTM step against a direct transcription of the gate equations

Outcome iglstm_equivalence() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + rng() % 5, hidden = 1 + rng() % 6, rows = 1 + rng() % 4;
    model::BlaConfig c;
    c.observation_days = 4;
    c.window_days = 2;
    c.metrics = 1;
    c.conv_kernels = in;
    c.lstm_units = {hidden};
    model::LstmLayer g = model::make_params(c).lstm[0];
    for (Param* p : {&g.w_forget, &g.w_input, &g.w_output, &g.w_cell, &g.b_forget, &g.b_input, &g.b_output,
                     &g.b_cell}) {
      p->value = testing::random_tensor(p->value.shape(), rng, -1.5, 1.5);
    }
    const Tensor x = testing::random_tensor({rows, in}, rng), h0 = testing::random_tensor({rows, hidden}, rng, -1, 1),
                 c0 = testing::random_tensor({rows, hidden}, rng);
    Tensor y({rows, 1});
    for (double& v : y.data()) v = static_cast<double>(rng() & 1);

    Tape tape;
    const model::LstmVars vars{tape.param(g.w_forget), tape.param(g.w_input), tape.param(g.w_output),
                               tape.param(g.w_cell),   tape.param(g.b_forget), tape.param(g.b_input),
                               tape.param(g.b_output), tape.param(g.b_cell)};
    const auto [h, cell] =
        model::iglstm_step(tape.constant(x), tape.constant(h0), tape.constant(c0), tape.constant(y), vars);

    for (std::size_t b = 0; b < rows; ++b) {
      // z = [h_prev, x_t, y_prev]
      std::vector<double> z;
      for (std::size_t j = 0; j < hidden; ++j) z.push_back(h0.at(b, j));
      for (std::size_t j = 0; j < in; ++j) z.push_back(x.at(b, j));
      z.push_back(y[b]);
      for (std::size_t j = 0; j < hidden; ++j) {
        double f = g.b_forget.value[j], i = g.b_input.value[j], o = g.b_output.value[j], u = g.b_cell.value[j];
        for (std::size_t r = 0; r < z.size(); ++r) {
          f += g.w_forget.value.at(r, j) * z[r];
          i += g.w_input.value.at(r, j) * z[r];
          o += g.w_output.value.at(r, j) * z[r];
          u += g.w_cell.value.at(r, j) * z[r];
        }
        const double c_new = sig(f) * c0.at(b, j) + sig(i) * std::tanh(u);
        const double h_new = sig(o) * std::tanh(c_new);
        worst = std::max({worst, std::abs(cell.value().at(b, j) - c_new), std::abs(h.value().at(b, j) - h_new)});
      }
    }
  }
  return verdict(worst < 1e-12, fmt("max abs error %.2e over 100 random cases", worst));
}

// ---------------------------------------------------------------------------
// 3: loss, masking and decay properties

Outcome loss_properties() {
  std::mt19937_64 rng(5);
  double mean_gap = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    Tensor p = testing::random_tensor({n, 1}, rng, 0.01, 0.99), y({n, 1});
    double bce = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng() & 1);
      bce -= y[i] * std::log(p[i]) + (1 - y[i]) * std::log(1 - p[i]);
    }
    const double j = train::attrition_loss_value(p, y, Tensor({n, 1}, 1.0), train::decay_weights(1.0, 1));
    mean_gap = std::max(mean_gap, std::abs(j - bce / static_cast<double>(n)));
  }

  Tape tape;
  const Var probs = tape.input(testing::random_tensor({5, 4}, rng, 0.05, 0.95));
  Tensor labels({5, 4});
  for (double& v : labels.data()) v = static_cast<double>(rng() & 1);
  const Var masked = train::attrition_loss(probs, labels, Tensor({5, 4}), train::decay_weights(0.6, 4), 5.0);
  tape.backward(masked);
  double grad_max = 0.0;
  for (double g : probs.grad().data()) grad_max = std::max(grad_max, std::abs(g));

  const bool example = train::decay_weights(0.5, 3) == std::vector<double>{0.25, 0.5, 1.0};
  bool last_is_one = true;
  for (double k : {0.0, 0.05, 0.3, 0.5, 0.9, 1.0}) {
    for (std::size_t c = 1; c <= 12; ++c) last_is_one = last_is_one && train::decay_weights(k, c).back() == 1.0;
  }
  const bool ok = mean_gap < 1e-12 && masked.value()[0] == 0.0 && grad_max == 0.0 && example && last_is_one;
  return verdict(ok, fmt("mean-BCE gap %.1e, masked J=%g, masked max|grad|=%g, decay(0.5,3) %s, last weight 1 %s",
                         mean_gap, masked.value()[0], grad_max, example ? "ok" : "wrong",
                         last_is_one ? "always" : "violated"));
}

// ---------------------------------------------------------------------------
// 4: metrics against brute-force oracles

Outcome metric_oracles() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 49;
    eval::ScoredSet s;
    for (std::size_t i = 0; i < n; ++i) {
      s.scores.push_back(trial % 2 ? unit(rng) : std::round(unit(rng) * 8.0) / 8.0);
      s.labels.push_back(static_cast<double>(rng() & 1));
    }
    s.labels[0] = 1.0;
    s.labels[n - 1] = 0.0;

    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (s.labels[i] == 1.0 && s.labels[j] == 0.0) {
          pairs += 1.0;
          wins += s.scores[i] > s.scores[j] ? 1.0 : s.scores[i] == s.scores[j] ? 0.5 : 0.0;
        }
      }
    }
    const double positives = std::accumulate(s.labels.begin(), s.labels.end(), 0.0);
    double ap = 0.0, prev_recall = 0.0;
    for (double t : std::set<double, std::greater<>>(s.scores.begin(), s.scores.end())) {
      double tp = 0.0, predicted = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (s.scores[i] >= t) {
          predicted += 1.0;
          tp += s.labels[i];
        }
      }
      ap += (tp / positives - prev_recall) * (tp / predicted);
      prev_recall = tp / positives;
    }
    const double threshold = static_cast<double>(rng() % 9) / 8.0;
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool hit = s.scores[i] >= threshold;
      (s.labels[i] == 1.0 ? (hit ? tp : fn) : (hit ? fp : tn)) += 1.0;
    }
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    const double mcc_ref = den == 0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(den);
    const double f1_ref = 2 * tp + fp + fn == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);

    const eval::ConfusionCounts cc = eval::confusion_at(s, threshold);
    mismatches += eval::roc_auc(s) != wins / pairs;
    mismatches += eval::pr_auc(s) != ap;
    mismatches += eval::mcc(cc) != mcc_ref;
    mismatches += eval::f1(cc) != f1_ref;
  }
  const double example = eval::mcc({3, 1, 4, 2});
  return verdict(mismatches == 0 && std::abs(example - 0.40825) <= 1e-5,
                 fmt("%zu inexact results over 200 sets; MCC(3,1,4,2) = %.6f", mismatches, example));
}

// ---------------------------------------------------------------------------
// Shared training helpers

struct HeldOut {
  double auc = 0.0;
  double seconds = 0.0;
  std::size_t best_epoch = 0;
};

train::TrainConfig train_settings(std::uint64_t seed, std::size_t epochs) {
  train::TrainConfig tc;
  tc.seed = seed;
  tc.max_epochs = epochs;
  return tc;
}

eval::ScoredSet target_set(const data::SnapshotFrame& frame, const std::vector<double>& scores) {
  eval::ScoredSet set;
  const std::size_t target = frame.snapshots() - 1;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.masks.at(i, target) == 0.0) continue;
    set.scores.push_back(scores[i]);
    set.labels.push_back(frame.labels.at(i, target));
  }
  return set;
}

struct PlantedRun {
  data::FrameSplit split;
  model::BlaConfig config;
};

PlantedRun planted(const data::SyntheticSpec& spec, std::uint64_t seed) {
  auto cohort = data::generate_synthetic_cohort(spec, seed);
  auto split = data::split_frame(cohort.frame, {}, seed);
  return {std::move(split), model::BlaConfig::for_frame(cohort.frame)};
}

HeldOut train_and_score(const PlantedRun& run, const train::TrainConfig& tc) {
  const auto start = std::chrono::steady_clock::now();
  const train::FitResult fit = train::fit(run.split.train, run.split.valid, run.config, tc, 1.0);
  const auto scores = model::predict(run.split.test, fit.params, run.config, tc.policy, {tc.intention_guidance});
  return {eval::roc_auc(target_set(run.split.test, scores)),
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), fit.best_epoch};
}

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5, 6, 7, 8};
constexpr std::size_t kRuns = std::size(kSeeds);

struct PlantedResults {
  HeldOut full[kRuns], no_guidance[kRuns], target_only[kRuns];
  double lr_auc = 0.0;
};

PlantedResults run_planted() {
  PlantedResults r;
  for (std::size_t s = 0; s < kRuns; ++s) {
    const PlantedRun run = planted(data::SyntheticSpec{}, kSeeds[s]);
    train::TrainConfig tc = train_settings(kSeeds[s], 200);
    r.full[s] = train_and_score(run, tc);
    tc.intention_guidance = false;
    r.no_guidance[s] = train_and_score(run, tc);
    tc.intention_guidance = true;
    tc.target_only = true;
    r.target_only[s] = train_and_score(run, tc);
    if (s == 0) {
      const auto lr = eval::lr_baseline_fit(run.split.train, run.split.valid, train_settings(kSeeds[s], 500));
      r.lr_auc = eval::roc_auc(target_set(run.split.test, eval::lr_baseline_predict(lr, run.split.test)));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// 5, 8, 9: planted-signal cohort

Outcome learnability(const PlantedResults& r) {
  const HeldOut& h = r.full[0];
  return verdict(h.auc >= 0.95 && h.seconds <= 600.0,
                 fmt("held-out AUC %.4f (best epoch %zu of at most 200) in %.1f s", h.auc, h.best_epoch, h.seconds));
}

Outcome ablations(const PlantedResults& r) {
  double guidance = 0.0, multi = 0.0;
  std::size_t guidance_wins = 0, multi_wins = 0;
  std::string per_seed;
  for (std::size_t s = 0; s < kRuns; ++s) {
    const double dg = r.full[s].auc - r.no_guidance[s].auc, dm = r.full[s].auc - r.target_only[s].auc;
    guidance += dg / static_cast<double>(kRuns);
    multi += dm / static_cast<double>(kRuns);
    guidance_wins += dg > 0;
    multi_wins += dm > 0;
    per_seed += fmt(" seed %llu: %.4f/%+.4f/%+.4f;", static_cast<unsigned long long>(kSeeds[s]), r.full[s].auc,
                    -dg, -dm);
  }
  return verdict(guidance >= 0.01 && multi >= 0.01,
                 fmt("mean paired AUC drop over %zu seeds: no guidance %.4f (lower on %zu), target-only loss %.4f "
                     "(lower on %zu); full/no-guidance/target-only:%s",
                     kRuns, guidance, guidance_wins, multi, multi_wins, per_seed.c_str()));
}

Outcome baseline_ordering(const PlantedResults& r) {
  return verdict(r.full[0].auc > r.lr_auc, fmt("BLA %.4f vs LR %.4f", r.full[0].auc, r.lr_auc));
}

// ---------------------------------------------------------------------------
// 6: validation loss over the decay grid

Outcome decay_curve() {
  data::SyntheticSpec spec;
  spec.users = 600;
  spec.observation_days = 60;
  spec.window_days = 10;
  spec.pattern_decay = 0.4;
  const std::vector<double> grid = train::default_k_grid();
  std::vector<double> mean(grid.size(), 0.0);
  const std::uint64_t seeds[] = {1, 2, 3, 4};
  for (std::uint64_t seed : seeds) {
    const PlantedRun run = planted(spec, seed);
    const auto tuning = train::tune_decay_k(run.split.train, run.split.valid, run.config, train_settings(seed, 100), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) mean[i] += tuning.valid_losses[i] / 4.0;
  }
  const std::size_t best = static_cast<std::size_t>(std::min_element(mean.begin(), mean.end()) - mean.begin());
  const bool interior = best > 0 && best + 1 < grid.size();
  std::string curve;
  for (std::size_t i = 0; i < grid.size(); ++i) curve += fmt(" %.1f:%.4f", grid[i], mean[i]);
  return verdict(interior && mean.front() > mean[best] && mean.back() > mean[best],
                 fmt("k*=%.1f; mean validation loss over 4 seeds:%s", grid[best], curve.c_str()));
}

// ---------------------------------------------------------------------------
// 7: periodic peaks of the activity-importance curve

Outcome boundary_peaks() {
  data::SyntheticSpec spec;
  spec.activity_memory = 1.0;
  const PlantedRun run = planted(spec, 1);
  const train::FitResult fit = train::fit(run.split.train, run.split.valid, run.config, train_settings(1, 200), 1.0);
  const auto maps = explain::saliency(run.split.test, fit.params, run.config);
  const std::vector<double> curve = explain::aggregate_activity(maps);

  std::vector<std::pair<double, std::size_t>> maxima;  // (importance, 1-based day)
  for (std::size_t d = 0; d < curve.size(); ++d) {
    const bool rises = d == 0 || curve[d] > curve[d - 1];
    const bool falls = d + 1 == curve.size() || curve[d] >= curve[d + 1];
    if (rises && falls) maxima.emplace_back(curve[d], d + 1);
  }
  std::sort(maxima.rbegin(), maxima.rend());
  const std::size_t c = run.config.snapshots(), tau = run.config.window_days;
  bool ok = maxima.size() >= c - 1;
  std::string days;
  for (std::size_t m = 0; m < std::min(c - 1, maxima.size()); ++m) {
    const std::size_t day = maxima[m].second;
    const std::size_t nearest = std::clamp<std::size_t>((day + tau / 2) / tau, 1, c) * tau;
    const std::size_t gap = day > nearest ? day - nearest : nearest - day;
    ok = ok && gap <= 2;
    days += fmt(" day %zu (boundary %zu)", day, nearest);
  }
  return verdict(ok, fmt("%zu largest local maxima:%s", c - 1, days.c_str()));
}

// ---------------------------------------------------------------------------
// 11: repeated CLI pipeline

Outcome cli_determinism() {
  testing::TempDir dir;
  testing::write_text(dir / "config.json", R"({"seed": 5,
    "synthetic": {"users": 400, "observation_days": 60, "window_days": 15, "metrics": 3},
    "architecture": {"conv_kernels": 6, "lstm_units": [10, 6], "dynamic_hidden": [6], "static_hidden": [6],
                     "fusion_hidden": [6]},
    "train": {"max_epochs": 15, "patience": 5, "batch_size": 64, "learning_rate": 0.01}})");
  const std::string config = (dir / "config.json").string();
  auto pipeline = [&](const std::string& tag) {
    auto p = [&](const std::string& name) { return (dir / (tag + name)).string(); };
    const std::vector<std::vector<std::string>> steps{
        {"bla", "synth", "--config", config, "--out", p("data")},
        {"bla", "train", "--config", config, "--data", p("data"), "--out", p("model")},
        {"bla", "predict", "--config", config, "--data", p("data"), "--model", p("model/model.json"), "--out",
         p("pred"), "--subset", "test"},
        {"bla", "eval", "--config", config, "--data", p("data"), "--scores", p("pred/scores.csv"), "--out",
         p("eval")}};
    for (const auto& args : steps) {
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) return false;
    }
    return true;
  };
  if (!pipeline("a_") || !pipeline("b_")) return verdict(false, "pipeline exited nonzero");
  const bool scores = testing::read_text(dir / "a_pred/scores.csv") == testing::read_text(dir / "b_pred/scores.csv");
  const bool metrics = testing::read_text(dir / "a_eval/metrics.csv") == testing::read_text(dir / "b_eval/metrics.csv");
  const bool model = testing::read_text(dir / "a_model/model.json") == testing::read_text(dir / "b_model/model.json");
  return verdict(scores && metrics && model, fmt("scores.csv %s, metrics.csv %s, model.json %s",
                                                 scores ? "identical" : "differ", metrics ? "identical" : "differ",
                                                 model ? "identical" : "differ"));
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Outcome::kFail, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* status = o.status == Outcome::kPass ? "PASS" : o.status == Outcome::kFail ? "FAIL" : "SKIPPED";
    failures += o.status == Outcome::kFail;
    std::printf("AC%-2d %-7s %s: %s [%.1f s]\n", id, status, name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "gradient correctness", gradient_check);
  report(2, "IG-LSTM step equivalence", iglstm_equivalence);
  report(3, "loss, masking and decay properties", loss_properties);
  report(4, "metric oracles", metric_oracles);

  PlantedResults planted_results;
  bool planted_ok = true;
  std::string planted_error;
  const auto planted_start = std::chrono::steady_clock::now();
  try {
    planted_results = run_planted();
  } catch (const std::exception& e) {
    planted_ok = false;
    planted_error = e.what();
  }
  std::printf("     (planted cohort: %zu training runs and the LR baseline in %.1f s)\n", 3 * kRuns,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - planted_start).count());
  auto planted_check = [&](Outcome (*fn)(const PlantedResults&)) -> std::function<Outcome()> {
    return [&, fn] { return planted_ok ? fn(planted_results) : Outcome{Outcome::kFail, "threw: " + planted_error}; };
  };

  report(5, "end-to-end learnability", planted_check(learnability));
  report(6, "U-shaped validation loss over k", decay_curve);
  report(7, "activity-importance peaks at snapshot boundaries", boundary_peaks);
  report(8, "ablation direction", planted_check(ablations));
  report(9, "BLA beats the LR baseline", planted_check(baseline_ordering));
  report(10, "public MOOC data comparison",
         [] { return Outcome{Outcome::kSkipped, "optional; the competition data is not available offline"}; });
  report(11, "CLI determinism", cli_determinism);

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
