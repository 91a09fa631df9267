#include "bla/eval/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"
#include "bla/training/adam.hpp"

namespace bla::eval {
namespace {

Tensor standardize(const LogisticModel& model, const Tensor& raw) {
  Tensor x = raw;
  const std::size_t f = model.mean.size();
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < f; ++j) x.at(i, j) = (x.at(i, j) - model.mean[j]) / model.scale[j];
  }
  return x;
}

Tensor gather(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t f = x.dim(1);
  Tensor out({rows.size(), f});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(x.raw() + rows[r] * f, f, out.raw() + r * f);
  }
  return out;
}

Var logits(Tape& tape, const Tensor& x, Var w, Var b) { return add_bias(matmul(tape.constant(x), w), b); }

}  // namespace

Tensor flatten_features(const data::SnapshotFrame& frame) {
  const std::size_t n = frame.size(), c = frame.snapshots(), a = frame.metrics();
  const std::size_t d = frame.dynamic_width(), s = frame.static_width(), tau = frame.config.window_days;
  Tensor out({n, c * a + c * d + s});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t col = 0;
    for (std::size_t t = 0; t < c; ++t) {
      for (std::size_t k = 0; k < a; ++k) {
        double sum = 0.0;
        for (std::size_t day = t * tau; day < (t + 1) * tau; ++day) sum += frame.activity.at(i, day, k);
        out.at(i, col++) = sum;
      }
    }
    for (std::size_t t = 0; t < c; ++t) {
      for (std::size_t k = 0; k < d; ++k) out.at(i, col++) = frame.dynamic.at(i, t, k);
    }
    for (std::size_t k = 0; k < s; ++k) out.at(i, col++) = frame.statics.at(i, k);
  }
  return out;
}

std::vector<std::size_t> target_rows(const data::SnapshotFrame& frame) {
  std::vector<std::size_t> rows;
  const std::size_t last = frame.snapshots() - 1;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.masks.at(i, last) != 0.0) rows.push_back(i);
  }
  return rows;
}

double lr_baseline_loss(const LogisticModel& model, const data::SnapshotFrame& frame) {
  const std::vector<std::size_t> rows = target_rows(frame);
  if (rows.empty()) throw ContractError("no unmasked target records");
  const std::vector<double> probs = lr_baseline_predict(model, frame);
  const std::vector<double> targets = frame.target_labels();
  double sum = 0.0;
  for (std::size_t i : rows) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    sum -= targets[i] == 1.0 ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(rows.size());
}

LogisticModel lr_baseline_fit(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                              const train::TrainConfig& config) {
  config.validate();
  const std::vector<std::size_t> rows = target_rows(train);
  if (rows.empty()) throw ContractError("training frame has no unmasked target records");
  const Tensor raw = flatten_features(train);
  const std::size_t f = raw.dim(1);

  LogisticModel model;
  model.mean.assign(f, 0.0);
  model.scale.assign(f, 1.0);
  for (std::size_t j = 0; j < f; ++j) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i : rows) mean += raw.at(i, j);
    mean /= static_cast<double>(rows.size());
    for (std::size_t i : rows) sq += (raw.at(i, j) - mean) * (raw.at(i, j) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(rows.size()));
    model.mean[j] = mean;
    model.scale[j] = sd > 0.0 ? sd : 1.0;
  }
  const Tensor x = standardize(model, raw);
  const std::vector<double> all_targets = train.target_labels();

  Param w(Tensor({f, 1})), b(Tensor({1}));
  std::vector<Param*> list{&w, &b};
  train::AdamState state(list);
  model.weight = w.value;
  model.bias = b.value;
  double best = lr_baseline_loss(model, valid);
  std::size_t stale = 0;
  std::vector<std::size_t> order = rows;
  std::mt19937_64 rng(config.seed);
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + begin, end - begin);
      Tensor y({batch.size(), 1});
      for (std::size_t r = 0; r < batch.size(); ++r) y[r] = all_targets[batch[r]];
      w.zero_grad();
      b.zero_grad();
      Tape tape;
      const Var probs = sigmoid(logits(tape, gather(x, batch), tape.param(w), tape.param(b)));
      tape.backward(scale(weighted_bce(probs, y, Tensor({batch.size(), 1}, 1.0)),
                          1.0 / static_cast<double>(batch.size())));
      train::adam_step(list, state, config.adam,
                       train::effective_lr(config.learning_rate, config.lr_decay, state.step));
    }
    LogisticModel candidate = model;
    candidate.weight = w.value;
    candidate.bias = b.value;
    const double loss = lr_baseline_loss(candidate, valid);
    if (loss < best) {
      best = loss;
      model = std::move(candidate);
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  return model;
}

std::vector<double> lr_baseline_predict(const LogisticModel& model, const data::SnapshotFrame& frame) {
  const Tensor x = standardize(model, flatten_features(frame));
  if (x.dim(1) != model.weight.dim(0)) {
    throw SchemaError("baseline expects " + std::to_string(model.weight.dim(0)) + " features, data has " +
                      std::to_string(x.dim(1)));
  }
  Tape tape;
  const Var p = sigmoid(logits(tape, x, tape.constant(model.weight), tape.constant(model.bias)));
  return {p.value().data().begin(), p.value().data().end()};
}

}  // namespace bla::eval
