#include <gtest/gtest.h>

#include <cmath>

#include "bla/datapipe/split.hpp"
#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"
#include "bla/training/init.hpp"
#include "bla/training/objective.hpp"
#include "bla/training/trainer.hpp"
#include "model_fixtures.hpp"
#include "test_util.hpp"

namespace bla::train {
namespace {

using model::BlaParams;

TEST(DecayWeights, KnownSchedules) {
  EXPECT_EQ(decay_weights(1.0, 3), (std::vector<double>{1.0, 1.0, 1.0}));
  EXPECT_EQ(decay_weights(0.5, 3), (std::vector<double>{0.25, 0.5, 1.0}));
  EXPECT_NEAR(decay_weights(0.9, 24)[0], 0.08863, 5e-6);
  EXPECT_EQ(decay_weights(0.0, 4), (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
}

TEST(DecayWeights, RejectsOutOfRange) {
  EXPECT_THROW(decay_weights(-0.1, 3), RangeError);
  EXPECT_THROW(decay_weights(1.01, 3), RangeError);
  EXPECT_THROW(decay_weights(0.5, 0), RangeError);
}

TEST(DecayWeights, MonotoneWithUnitLastEntry) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> k_dist(1e-3, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double k = k_dist(rng);
    const std::size_t c = 1 + rng() % 30;
    const auto w = decay_weights(k, c);
    EXPECT_EQ(w.back(), 1.0);
    for (std::size_t t = 1; t < c; ++t) EXPECT_LE(w[t - 1], w[t]);
  }
}

TEST(Loss, SingleHalfProbabilityIsLnTwo) {
  const double j = attrition_loss_value(Tensor::matrix({{0.5}}), Tensor::matrix({{1.0}}), Tensor::matrix({{1.0}}),
                                        decay_weights(1.0, 1));
  EXPECT_NEAR(j, 0.693147, 1e-6);
}

TEST(Loss, HandEvaluatedTwoSnapshotCase) {
  const double j = attrition_loss_value(Tensor::matrix({{0.8, 0.3}}), Tensor::matrix({{1.0, 0.0}}),
                                        Tensor::matrix({{1.0, 1.0}}), decay_weights(0.5, 2));
  EXPECT_NEAR(j, 0.5 * -std::log(0.8) - std::log(0.7), 1e-15);
  EXPECT_NEAR(j, 0.46825, 5e-6);
}

TEST(Loss, ReducesToMeanCrossEntropy) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    Tensor p = testing::random_tensor({n, 1}, rng, 0.01, 0.99), y({n, 1});
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng() & 1);
      mean -= y[i] == 1.0 ? std::log(p[i]) : std::log(1.0 - p[i]);
    }
    mean /= static_cast<double>(n);
    EXPECT_NEAR(attrition_loss_value(p, y, Tensor({n, 1}, 1.0), decay_weights(1.0, 1)), mean, 1e-13);
  }
}

TEST(Loss, FullyMaskedBatchIsZeroWithZeroGradient) {
  std::mt19937_64 rng(3);
  Tape tape;
  const Var p = tape.input(testing::random_tensor({4, 3}, rng, 0.1, 0.9));
  const Var j = attrition_loss(p, Tensor({4, 3}, 1.0), Tensor({4, 3}), decay_weights(0.7, 3), 4.0);
  tape.backward(j);
  EXPECT_EQ(j.value()[0], 0.0);
  for (double g : p.grad().data()) EXPECT_EQ(g, 0.0);
}

TEST(Loss, LinearInDecayWeights) {
  std::mt19937_64 rng(4);
  const Tensor probs = testing::random_tensor({5, 3}, rng, 0.05, 0.95);
  Tensor labels({5, 3}), masks({5, 3}, 1.0);
  for (double& v : labels.data()) v = static_cast<double>(rng() & 1);
  masks.at(1, 0) = 0.0;
  const std::vector<double> zeta{0.2, 0.6, 1.0};
  const std::vector<double> scaled{0.6, 1.8, 3.0};
  Tape a, b;
  const Var pa = a.input(probs), pb = b.input(probs);
  const Var ja = attrition_loss(pa, labels, masks, zeta, 5.0), jb = attrition_loss(pb, labels, masks, scaled, 5.0);
  a.backward(ja);
  b.backward(jb);
  EXPECT_NEAR(jb.value()[0], 3.0 * ja.value()[0], 1e-12);
  for (std::size_t i = 0; i < probs.size(); ++i) EXPECT_NEAR(pb.grad()[i], 3.0 * pa.grad()[i], 1e-12);
}

TEST(Loss, MaskedTargetCutsGradientToLastWindow) {
  // Days of the last window feed only the last step; masking that step for
  // one user leaves those days with exactly zero gradient.
  const auto cohort = testing::small_cohort(8);
  const auto config = testing::small_config(cohort.frame);
  BlaParams params = model::make_params(config);
  glorot_initialize(params, 5);
  const model::Batch batch = model::make_batch(cohort.frame, 0, 8);
  Tensor masks = batch.masks;
  masks.at(2, config.snapshots() - 1) = 0.0;

  Tape tape;
  const auto pv = model::bind_params_detached(tape, params, false);
  const Var activity = tape.input(batch.activity);
  const model::InputVars in{activity, tape.constant(batch.dynamic), tape.constant(batch.statics),
                            tape.constant(batch.labels)};
  tape.backward(attrition_loss(model::forward(pv, in, config).probs, batch.labels, masks,
                               decay_weights(0.8, config.snapshots()), 8.0));
  const Tensor& g = activity.grad();
  const std::size_t tau = config.window_days;
  for (std::size_t d = config.observation_days - tau; d < config.observation_days; ++d) {
    for (std::size_t a = 0; a < config.metrics; ++a) {
      EXPECT_EQ(g.at(2, d, a), 0.0);
      EXPECT_NE(g.at(3, d, a), 0.0);
    }
  }
}

TEST(Glorot, LimitsAndFans) {
  EXPECT_DOUBLE_EQ(glorot_limit({3, 3}), 1.0);
  EXPECT_EQ(glorot_fans({14, 30, 4}), (std::pair<std::size_t, std::size_t>{120, 420}));
  EXPECT_THROW(glorot_limit({5}), DimensionError);
}

TEST(Glorot, DrawsStayWithinLimit) {
  const Tensor t = glorot_init({400, 250}, 9);
  const double limit = glorot_limit({400, 250});
  double lo = 0.0, hi = 0.0;
  for (double v : t.data()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_LE(hi, limit);
  EXPECT_GE(lo, -limit);
  EXPECT_GT(hi, 0.99 * limit);
  EXPECT_LT(lo, -0.99 * limit);
  EXPECT_EQ(glorot_init({400, 250}, 9), t);
  EXPECT_NE(glorot_init({400, 250}, 10), t);
}

TEST(Glorot, BiasesStartAtZero) {
  const auto cohort = testing::small_cohort(4);
  BlaParams params = model::make_params(testing::small_config(cohort.frame));
  glorot_initialize(params, 1);
  params.for_each([](const std::string& name, const Param& p) {
    if (p.value.rank() == 1) {
      for (double v : p.value.data()) EXPECT_EQ(v, 0.0) << name;
    } else {
      EXPECT_LE(std::abs(p.value[0]), glorot_limit(p.value.shape())) << name;
    }
  });
}

TEST(Adam, ZeroGradientLeavesParamsAndMomentsUnchanged) {
  Param p(Tensor::vector({1.0, -2.0}));
  std::vector<Param*> list{&p};
  AdamState state(list);
  adam_step(list, state, {}, 0.001);
  EXPECT_EQ(p.value, Tensor::vector({1.0, -2.0}));
  EXPECT_EQ(state.m[0], Tensor({2}));
  EXPECT_EQ(state.v[0], Tensor({2}));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Param p(Tensor::scalar(0.0));
  p.grad = Tensor::scalar(1.0);
  std::vector<Param*> list{&p};
  AdamState state(list);
  adam_step(list, state, {}, 0.001);
  EXPECT_NEAR(p.value[0], -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, MatchesScalarReference) {
  Param p(Tensor::scalar(0.3));
  std::vector<Param*> list{&p};
  AdamState state(list);
  double x = 0.3, m = 0.0, v = 0.0;
  for (int step = 1; step <= 50; ++step) {
    const double g = 2.0 * x - std::sin(step);
    p.grad = Tensor::scalar(2.0 * p.value[0] - std::sin(step));
    const double lr = effective_lr(0.01, 1e-3, static_cast<std::size_t>(step - 1));
    adam_step(list, state, {}, lr);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= lr * (m / (1 - std::pow(0.9, step))) / (std::sqrt(v / (1 - std::pow(0.999, step))) + 1e-8);
    EXPECT_NEAR(p.value[0], x, 1e-14);
  }
  EXPECT_DOUBLE_EQ(effective_lr(0.001, 1e-3, 1000), 0.0005);
}

class TrainerTest : public ::testing::Test {
 protected:
  data::SyntheticCohort cohort = testing::small_cohort(300, 11);
  model::BlaConfig config = testing::small_config(cohort.frame);
  data::FrameSplit split = data::split_frame(cohort.frame, {}, 3);

  TrainConfig quick(std::size_t epochs) const {
    TrainConfig tc;
    tc.batch_size = 32;
    tc.max_epochs = epochs;
    tc.patience = std::min<std::size_t>(20, epochs - 1);
    tc.learning_rate = 0.01;
    tc.seed = 4;
    return tc;
  }
};

TEST_F(TrainerTest, ShardedGradientMatchesSingleTape) {
  BlaParams params = model::make_params(config);
  glorot_initialize(params, 2);
  std::vector<std::size_t> rows(80);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = (i * 7) % cohort.frame.size();
  const auto zeta = decay_weights(0.6, config.snapshots());
  const double loss = batch_gradient(cohort.frame, rows, params, config, zeta, {}, ExecPolicy::kSerial);

  BlaParams ref = params;
  ref.zero_grad();
  Tape tape;
  const auto pv = model::bind_params(tape, ref);
  const model::Batch b = model::make_batch(cohort.frame, rows);
  const model::InputVars in{tape.constant(b.activity), tape.constant(b.dynamic), tape.constant(b.statics),
                            tape.constant(b.labels)};
  const Var j = attrition_loss(model::forward(pv, in, config).probs, b.labels, b.masks, zeta, 80.0);
  tape.backward(j);
  EXPECT_NEAR(loss, j.value()[0], 1e-12);
  std::vector<Tensor> got, want;
  params.for_each([&](const std::string&, const Param& p) { got.push_back(p.grad); });
  ref.for_each([&](const std::string&, const Param& p) { want.push_back(p.grad); });
  for (std::size_t p = 0; p < got.size(); ++p) EXPECT_LT(testing::max_abs_diff(got[p], want[p]), 1e-12);
}

TEST_F(TrainerTest, SerialAndParallelGradientsAreIdentical) {
  BlaParams a = model::make_params(config);
  glorot_initialize(a, 2);
  BlaParams b = a;
  std::vector<std::size_t> rows(cohort.frame.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto zeta = decay_weights(1.0, config.snapshots());
  EXPECT_EQ(batch_gradient(cohort.frame, rows, a, config, zeta, {}, ExecPolicy::kSerial),
            batch_gradient(cohort.frame, rows, b, config, zeta, {}, ExecPolicy::kParallel));
  std::vector<Tensor> ga, gb;
  a.for_each([&](const std::string&, const Param& p) { ga.push_back(p.grad); });
  b.for_each([&](const std::string&, const Param& p) { gb.push_back(p.grad); });
  EXPECT_EQ(ga, gb);
}

TEST_F(TrainerTest, ZeroEpochsReturnsInitialParameters) {
  TrainConfig tc = quick(2);
  tc.max_epochs = 0;
  const FitResult fr = fit(split.train, split.valid, config, tc, 1.0);
  EXPECT_TRUE(fr.history.empty());
  EXPECT_EQ(fr.best_epoch, 0u);
  BlaParams init = model::make_params(config);
  glorot_initialize(init, tc.seed);
  EXPECT_EQ(model::predict(split.test, fr.params, config), model::predict(split.test, init, config));
}

TEST_F(TrainerTest, ValidationLossImprovesAndBestIsKept) {
  const FitResult fr = fit(split.train, split.valid, config, quick(30), 1.0);
  ASSERT_FALSE(fr.history.empty());
  EXPECT_LT(fr.history[std::min<std::size_t>(19, fr.history.size() - 1)].valid_loss, fr.history[0].valid_loss);
  double best = std::numeric_limits<double>::infinity();
  for (const EpochRecord& r : fr.history) best = std::min(best, r.valid_loss);
  EXPECT_EQ(fr.best_valid_loss, best);
  EXPECT_EQ(validation_loss(split.valid, fr.params, config), best);
  EXPECT_EQ(fr.history[fr.best_epoch - 1].valid_loss, best);
}

TEST_F(TrainerTest, StopsAfterPatienceWithoutImprovement) {
  TrainConfig tc = quick(200);
  tc.patience = 3;
  tc.learning_rate = 0.05;
  const FitResult fr = fit(split.train, split.valid, config, tc, 1.0);
  if (fr.history.size() < tc.max_epochs) EXPECT_EQ(fr.history.size(), fr.best_epoch + tc.patience);
}

TEST_F(TrainerTest, RunsAreDeterministic) {
  const FitResult a = fit(split.train, split.valid, config, quick(5), 0.5);
  const FitResult b = fit(split.train, split.valid, config, quick(5), 0.5);
  std::vector<Tensor> pa, pb;
  a.params.for_each([&](const std::string&, const Param& p) { pa.push_back(p.value); });
  b.params.for_each([&](const std::string&, const Param& p) { pb.push_back(p.value); });
  EXPECT_EQ(pa, pb);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) EXPECT_EQ(a.history[e].valid_loss, b.history[e].valid_loss);
}

TEST_F(TrainerTest, RejectsEmptyFramesAndBadSettings) {
  const data::SnapshotFrame empty = data::subset(cohort.frame, std::vector<std::size_t>{});
  EXPECT_THROW(fit(empty, split.valid, config, quick(5), 1.0), ContractError);
  TrainConfig tc = quick(5);
  tc.patience = 0;
  EXPECT_THROW(fit(split.train, split.valid, config, tc, 1.0), ConfigError);
  tc = quick(5);
  tc.batch_size = 0;
  EXPECT_THROW(fit(split.train, split.valid, config, tc, 1.0), ConfigError);
  EXPECT_THROW(fit(split.train, split.valid, config, quick(5), 1.5), RangeError);
}

TEST_F(TrainerTest, SingleGridPointIsReturned) {
  const DecayTuning t = tune_decay_k(split.train, split.valid, config, quick(3), {1.0});
  EXPECT_EQ(t.best_k, 1.0);
  ASSERT_EQ(t.valid_losses.size(), 1u);
}

TEST_F(TrainerTest, TiesGoToLargerK) {
  // Target-only supervision ignores k, so every grid point trains identically.
  TrainConfig tc = quick(3);
  tc.target_only = true;
  const DecayTuning t = tune_decay_k(split.train, split.valid, config, tc, {0.3, 0.9, 0.6});
  EXPECT_EQ(t.valid_losses[0], t.valid_losses[1]);
  EXPECT_EQ(t.best_k, 0.9);
}

TEST_F(TrainerTest, HistoryCsvLayout) {
  const FitResult fr = fit(split.train, split.valid, config, quick(3), 1.0);
  testing::TempDir dir;
  write_history(fr.history, dir / "history.csv");
  const std::string text = testing::read_text(dir / "history.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,train_loss,valid_loss,lr_effective");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(fr.history.size() + 1));
}

}  // namespace
}  // namespace bla::train
