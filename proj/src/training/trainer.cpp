#include "bla/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bla/datapipe/csv.hpp"
#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"
#include "bla/training/init.hpp"
#include "bla/training/objective.hpp"

namespace bla::train {
namespace {

std::vector<Param*> param_list(model::BlaParams& params) {
  std::vector<Param*> out;
  params.for_each([&](const std::string&, Param& p) { out.push_back(&p); });
  return out;
}

std::mt19937_64 epoch_rng(std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  return std::mt19937_64(seq);
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (lr_decay < 0.0) throw ConfigError("lr_decay must be non-negative");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0 && adam.beta2 > 0.0 && adam.beta2 < 1.0 && adam.epsilon > 0.0)) {
    throw ConfigError("Adam moments must lie in (0, 1) and epsilon must be positive");
  }
}

double batch_gradient(const data::SnapshotFrame& frame, std::span<const std::size_t> rows, model::BlaParams& params,
                      const model::BlaConfig& config, std::span<const double> zeta,
                      const model::ForwardOptions& options, ExecPolicy policy) {
  if (rows.empty()) throw ContractError("gradient of an empty batch");
  const std::size_t shards = shard_count(rows.size(), kDefaultShardSize);
  const double n = static_cast<double>(rows.size());
  std::vector<std::vector<Tensor>> grads(shards);
  std::vector<double> losses(shards, 0.0);
  const model::BlaParams& frozen = params;

  for_each_shard(rows.size(), kDefaultShardSize, policy, [&](std::size_t shard, std::size_t begin, std::size_t end) {
    const model::Batch batch = model::make_batch(frame, rows.subspan(begin, end - begin));
    Tape tape;
    const model::ParamVars pv = model::bind_params_detached(tape, frozen, true);
    const model::InputVars in{tape.constant(batch.activity), tape.constant(batch.dynamic),
                              tape.constant(batch.statics), tape.constant(batch.labels)};
    const Var probs = model::forward(pv, in, config, options).probs;
    const Var loss = attrition_loss(probs, batch.labels, batch.masks, zeta, n);
    tape.backward(loss);
    losses[shard] = loss.value()[0];
    for (const Var& v : pv.flat()) grads[shard].push_back(v.grad());
  });

  double total = 0.0;
  const std::vector<Param*> list = param_list(params);
  for (std::size_t p = 0; p < list.size(); ++p) list[p]->zero_grad();
  for (std::size_t s = 0; s < shards; ++s) {
    total += losses[s];
    for (std::size_t p = 0; p < list.size(); ++p) {
      Tensor& g = list[p]->grad;
      const Tensor& part = grads[s][p];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += part[i];
    }
  }
  return total;
}

double validation_loss(const data::SnapshotFrame& frame, const model::BlaParams& params,
                       const model::BlaConfig& config, const model::ForwardOptions& options, ExecPolicy policy) {
  const Tensor probs = model::predict_all(frame, params, config, policy, options);
  const std::size_t last = config.snapshots() - 1;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.masks.at(i, last) == 0.0) continue;
    const double p = std::clamp(probs.at(i, last), kProbClamp, 1.0 - kProbClamp);
    sum -= frame.labels.at(i, last) == 1.0 ? std::log(p) : std::log(1.0 - p);
    ++count;
  }
  if (count == 0) throw ContractError("validation frame has no unmasked target records");
  return sum / static_cast<double>(count);
}

FitResult fit(const data::SnapshotFrame& train, const data::SnapshotFrame& valid, const model::BlaConfig& config,
              const TrainConfig& train_config, double k) {
  model::BlaParams params = model::make_params(config);
  glorot_initialize(params, train_config.seed);
  return fit_from(train, valid, config, train_config, k, std::move(params));
}

FitResult fit_from(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                   const model::BlaConfig& config, const TrainConfig& tc, double k, model::BlaParams params) {
  tc.validate();
  config.validate();
  if (train.size() == 0) throw ContractError("training frame is empty");
  if (valid.size() == 0) throw ContractError("validation frame is empty");
  model::check_compatible(config, train);
  model::check_compatible(config, valid);

  std::vector<double> zeta = decay_weights(k, config.snapshots());
  if (tc.target_only) std::fill(zeta.begin(), zeta.end() - 1, 0.0);
  const model::ForwardOptions options{tc.intention_guidance};

  FitResult result;
  result.best_valid_loss = validation_loss(valid, params, config, options, tc.policy);
  result.params = params;

  const std::vector<Param*> list = param_list(params);
  AdamState state(list);
  std::vector<std::size_t> order(train.size());
  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    auto rng = epoch_rng(tc.seed, epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double weighted = 0.0;
    double lr = tc.learning_rate;
    for (std::size_t begin = 0; begin < order.size(); begin += tc.batch_size) {
      const std::size_t end = std::min(order.size(), begin + tc.batch_size);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      weighted += static_cast<double>(rows.size()) *
                  batch_gradient(train, rows, params, config, zeta, options, tc.policy);
      lr = effective_lr(tc.learning_rate, tc.lr_decay, state.step);
      adam_step(list, state, tc.adam, lr);
    }
    if (!params.all_finite()) throw ContractError("parameters diverged at epoch " + std::to_string(epoch));

    EpochRecord rec{epoch, weighted / static_cast<double>(order.size()),
                    validation_loss(valid, params, config, options, tc.policy), lr};
    result.history.push_back(rec);
    if (rec.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = rec.valid_loss;
      result.best_epoch = epoch;
      result.params = params;
      stale = 0;
    } else if (++stale >= tc.patience) {
      break;
    }
  }
  result.params.zero_grad();
  return result;
}

std::vector<double> default_k_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

DecayTuning tune_decay_k(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                         const model::BlaConfig& config, const TrainConfig& train_config, std::vector<double> grid) {
  if (grid.empty()) throw ConfigError("decay grid is empty");
  for (double k : grid) decay_weights(k, 1);
  DecayTuning out;
  out.grid = grid;
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    FitResult fr = fit(train, valid, config, train_config, grid[g]);
    out.valid_losses.push_back(fr.best_valid_loss);
    const bool better = g == 0 || fr.best_valid_loss < out.valid_losses[best] ||
                        (fr.best_valid_loss == out.valid_losses[best] && grid[g] > grid[best]);
    if (better) {
      best = g;
      out.best_fit = std::move(fr);
    }
  }
  out.best_k = grid[best];
  return out;
}

void write_history(std::span<const EpochRecord> history, const std::filesystem::path& path) {
  std::ofstream out = data::open_output(path);
  out << "epoch,train_loss,valid_loss,lr_effective\n";
  for (const EpochRecord& r : history) {
    out << r.epoch << ',' << data::format_real(r.train_loss) << ',' << data::format_real(r.valid_loss) << ','
        << data::format_real(r.lr_effective) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace bla::train
