#include "bla/model/network.hpp"

#include <algorithm>

#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"

namespace bla::model {
namespace {

template <typename Params, typename Bind>
ParamVars bind_with(Params& p, Bind&& bind) {
  ParamVars v;
  v.summarizer = bind(p.summarizer);
  for (auto& g : p.lstm) {
    v.lstm.push_back({bind(g.w_forget), bind(g.w_input), bind(g.w_output), bind(g.w_cell), bind(g.b_forget),
                      bind(g.b_input), bind(g.b_output), bind(g.b_cell)});
  }
  auto stack = [&](auto& layers, std::vector<DenseVars>& out) {
    for (auto& l : layers) out.push_back({bind(l.weight), bind(l.bias)});
  };
  stack(p.dynamic_path, v.dynamic_path);
  stack(p.static_path, v.static_path);
  stack(p.fusion, v.fusion);
  v.output = {bind(p.output.weight), bind(p.output.bias)};
  return v;
}

Var gate(Var z, Var w, Var b) { return add_bias(matmul(z, w), b); }

void require_binary(Var y) {
  for (double v : y.value().data()) {
    if (v != 0.0 && v != 1.0) throw ContractError("precedent status must be 0 or 1, got " + std::to_string(v));
  }
}

}  // namespace

std::vector<Var> ParamVars::flat() const {
  std::vector<Var> out{summarizer};
  for (const auto& g : lstm) {
    out.insert(out.end(), {g.w_forget, g.w_input, g.w_output, g.w_cell, g.b_forget, g.b_input, g.b_output, g.b_cell});
  }
  for (const auto* stack : {&dynamic_path, &static_path, &fusion}) {
    for (const auto& l : *stack) out.insert(out.end(), {l.weight, l.bias});
  }
  out.insert(out.end(), {output.weight, output.bias});
  return out;
}

ParamVars bind_params(Tape& tape, BlaParams& params) {
  return bind_with(params, [&](Param& p) { return tape.param(p); });
}

ParamVars bind_params_detached(Tape& tape, const BlaParams& params, bool track_grads) {
  return bind_with(params, [&](const Param& p) { return track_grads ? tape.input(p.value) : tape.constant(p.value); });
}

Var dense(Var x, const DenseVars& layer, Activation act) {
  const Var pre = add_bias(matmul(x, layer.weight), layer.bias);
  switch (act) {
    case Activation::kTanh:
      return tanh(pre);
    case Activation::kSigmoid:
      return sigmoid(pre);
    case Activation::kIdentity:
      break;
  }
  return pre;
}

std::vector<Var> temporal_dense(std::span<const Var> slices, const DenseVars& layer, Activation act) {
  std::vector<Var> out;
  out.reserve(slices.size());
  for (const Var& s : slices) out.push_back(dense(s, layer, act));
  return out;
}

std::vector<Var> summarize_activities(Var activity, Var summarizer, const BlaConfig& config) {
  if (activity.value().rank() != 3 || activity.shape()[1] != config.observation_days ||
      activity.shape()[2] != config.metrics) {
    throw ConfigError("activity input " + shape_string(activity.shape()) + " does not match the model geometry");
  }
  if (config.conv_steps() != config.snapshots()) {
    throw ConfigError("summarization geometry does not yield one step per snapshot");
  }
  const Var summary = tanh(conv1d(activity, summarizer, config.stride()));
  std::vector<Var> steps;
  for (std::size_t t = 0; t < config.snapshots(); ++t) steps.push_back(time_slice(summary, t));
  return steps;
}

std::pair<Var, Var> iglstm_step(Var x_t, Var h_prev, Var c_prev, Var y_prev, const LstmVars& layer) {
  require_binary(y_prev);
  const Var z = concat({h_prev, x_t, y_prev}, 1);
  const Var f = sigmoid(gate(z, layer.w_forget, layer.b_forget));
  const Var i = sigmoid(gate(z, layer.w_input, layer.b_input));
  const Var o = sigmoid(gate(z, layer.w_output, layer.b_output));
  const Var candidate = tanh(gate(z, layer.w_cell, layer.b_cell));
  const Var c = add(hadamard(f, c_prev), hadamard(i, candidate));
  const Var h = hadamard(o, tanh(c));
  return {h, c};
}

std::vector<Var> iglstm_forward(std::span<const Var> xs, Var guided, const LstmVars& layer) {
  if (xs.empty()) throw DimensionError("iglstm_forward: empty sequence");
  const std::size_t batch = xs[0].shape()[0];
  if (guided.value().rank() != 2 || guided.shape()[0] != batch || guided.shape()[1] != xs.size()) {
    throw DimensionError("iglstm_forward: guided labels " + shape_string(guided.shape()) + " vs " +
                         std::to_string(xs.size()) + " steps of batch " + std::to_string(batch));
  }
  Tape& tape = guided.tape();
  const std::size_t hidden = layer.b_forget.shape()[0];
  Var h = tape.constant(Tensor({batch, hidden}));
  Var c = h;
  const Var no_status = tape.constant(Tensor({batch, 1}));
  std::vector<Var> out;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    const Var y_prev = t == 0 ? no_status : slice_cols(guided, t - 1, t);
    std::tie(h, c) = iglstm_step(xs[t], h, c, y_prev, layer);
    out.push_back(h);
  }
  return out;
}

ForwardResult forward(const ParamVars& params, const InputVars& inputs, const BlaConfig& config,
                      const ForwardOptions& options) {
  const std::size_t c = config.snapshots();
  const std::size_t batch = inputs.activity.shape()[0];
  Tape& tape = inputs.activity.tape();
  auto require = [&](Var v, const Shape& want, const char* what) {
    if (v.shape() != want) {
      throw ConfigError(std::string(what) + " input " + shape_string(v.shape()) + ", model expects " +
                        shape_string(want));
    }
  };
  require(inputs.activity, {batch, config.observation_days, config.metrics}, "activity");
  require(inputs.dynamic, {batch, c, config.dynamic_width}, "dynamic");
  require(inputs.statics, {batch, config.static_width}, "static");
  require(inputs.guided, {batch, c}, "guided-label");

  // Activity path.
  std::vector<Var> seq = summarize_activities(inputs.activity, params.summarizer, config);
  const Var guided = options.intention_guidance ? inputs.guided : tape.constant(Tensor({batch, c}));
  for (const LstmVars& layer : params.lstm) seq = iglstm_forward(seq, guided, layer);

  // Dynamic path.
  std::vector<Var> dyn;
  if (config.dynamic_width > 0) {
    for (std::size_t t = 0; t < c; ++t) dyn.push_back(time_slice(inputs.dynamic, t));
    for (const DenseVars& layer : params.dynamic_path) dyn = temporal_dense(dyn, layer, Activation::kTanh);
  }

  // Static path, forked to every slice.
  Var stat;
  if (config.static_width > 0) {
    stat = inputs.statics;
    for (const DenseVars& layer : params.static_path) stat = dense(stat, layer, Activation::kTanh);
  }

  std::vector<Var> logits;
  for (std::size_t t = 0; t < c; ++t) {
    std::vector<Var> parts{seq[t]};
    if (config.dynamic_width > 0) parts.push_back(dyn[t]);
    if (config.static_width > 0) parts.push_back(stat);
    Var fused = parts.size() == 1 ? parts[0] : concat(parts, 1);
    for (const DenseVars& layer : params.fusion) fused = dense(fused, layer, Activation::kTanh);
    logits.push_back(dense(fused, params.output, Activation::kIdentity));
  }
  ForwardResult result;
  result.logits = concat(logits, 1);
  result.probs = sigmoid(result.logits);
  return result;
}

Batch make_batch(const data::SnapshotFrame& frame, std::span<const std::size_t> rows) {
  const data::SnapshotFrame sub = data::subset(frame, rows);
  return {sub.activity, sub.dynamic, sub.statics, sub.labels, sub.masks};
}

Batch make_batch(const data::SnapshotFrame& frame, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = begin + i;
  return make_batch(frame, rows);
}

std::vector<double> predict_range(const data::SnapshotFrame& frame, const BlaParams& params, const BlaConfig& config,
                                  std::size_t begin, std::size_t end, const ForwardOptions& options) {
  const Batch batch = make_batch(frame, begin, end);
  Tape tape;
  const ParamVars pv = bind_params_detached(tape, params, false);
  const InputVars in{tape.constant(batch.activity), tape.constant(batch.dynamic), tape.constant(batch.statics),
                     tape.constant(batch.labels)};
  const Tensor& probs = forward(pv, in, config, options).probs.value();
  return {probs.data().begin(), probs.data().end()};
}

Tensor predict_all(const data::SnapshotFrame& frame, const BlaParams& params, const BlaConfig& config,
                   ExecPolicy policy, const ForwardOptions& options) {
  check_compatible(config, frame);
  const std::size_t c = config.snapshots();
  Tensor out({frame.size(), c});
  for_each_shard(frame.size(), kDefaultShardSize, policy, [&](std::size_t, std::size_t begin, std::size_t end) {
    const std::vector<double> probs = predict_range(frame, params, config, begin, end, options);
    std::copy(probs.begin(), probs.end(), out.raw() + begin * c);
  });
  return out;
}

std::vector<double> predict(const data::SnapshotFrame& frame, const BlaParams& params, const BlaConfig& config,
                            ExecPolicy policy, const ForwardOptions& options) {
  const Tensor all = predict_all(frame, params, config, policy, options);
  const std::size_t c = config.snapshots();
  std::vector<double> out(frame.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = all.at(i, c - 1);
  return out;
}

void check_compatible(const BlaConfig& config, const data::SnapshotFrame& frame) {
  const bool ok = config.observation_days == frame.config.observation_days &&
                  config.window_days == frame.config.window_days && config.metrics == frame.metrics() &&
                  config.dynamic_width == frame.dynamic_width() && config.static_width == frame.static_width();
  if (ok) return;
  auto dims = [](std::size_t c, std::size_t a, std::size_t d, std::size_t s) {
    return "C=" + std::to_string(c) + " A=" + std::to_string(a) + " D=" + std::to_string(d) + " S=" + std::to_string(s);
  };
  throw SchemaError("model/data incompatibility: model expects " +
                    dims(config.snapshots(), config.metrics, config.dynamic_width, config.static_width) +
                    " (T=" + std::to_string(config.observation_days) + ", tau=" + std::to_string(config.window_days) +
                    "), data has " +
                    dims(frame.snapshots(), frame.metrics(), frame.dynamic_width(), frame.static_width()) +
                    " (T=" + std::to_string(frame.config.observation_days) +
                    ", tau=" + std::to_string(frame.config.window_days) + ")");
}

}  // namespace bla::model
