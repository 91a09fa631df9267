#pragma once

#include <span>
#include <utility>
#include <vector>

#include "bla/datapipe/frame.hpp"
#include "bla/diffcore/tape.hpp"
#include "bla/model/params.hpp"
#include "bla/parallel.hpp"

namespace bla::model {

/// Tape variables standing for one DenseLayer / LstmLayer / BlaParams.
struct DenseVars {
  Var weight, bias;
};
struct LstmVars {
  Var w_forget, w_input, w_output, w_cell;
  Var b_forget, b_input, b_output, b_cell;
};
struct ParamVars {
  Var summarizer;
  std::vector<LstmVars> lstm;
  std::vector<DenseVars> dynamic_path, static_path, fusion;
  DenseVars output;

  /// Same order as BlaParams::for_each.
  std::vector<Var> flat() const;
};

/// Leaves bound to `params`: backward() accumulates into each Param::grad.
ParamVars bind_params(Tape& tape, BlaParams& params);

/// Leaves holding copies of `params`. With `track_grads` their gradients can
/// be read from the returned vars after backward(); `params` is never written,
/// so several tapes may bind the same BlaParams concurrently.
ParamVars bind_params_detached(Tape& tape, const BlaParams& params, bool track_grads);

enum class Activation { kTanh, kSigmoid, kIdentity };

/// act(x . W + b) for x [B x in].
Var dense(Var x, const DenseVars& layer, Activation act);

/// Applies the same dense layer to every time slice independently.
std::vector<Var> temporal_dense(std::span<const Var> slices, const DenseVars& layer, Activation act);

/// tanh of the strided summarization conv. activity [B x T x A] -> C slices of [B x K].
std::vector<Var> summarize_activities(Var activity, Var summarizer, const BlaConfig& config);

/// One intention-guided LSTM step over a batch:
///   z = [h_prev, x_t, y_prev]
///   f = sigma(z W_f + b_f), i = sigma(z W_i + b_i), o = sigma(z W_o + b_o)
///   c = f * c_prev + i * tanh(z W_C + b_C), h = o * tanh(c)
/// y_prev is [B x 1] and every entry must be 0 or 1 (ContractError otherwise).
std::pair<Var, Var> iglstm_step(Var x_t, Var h_prev, Var c_prev, Var y_prev, const LstmVars& layer);

/// Runs the recurrence over C steps from zero state. Step t consumes the
/// status of step t-1 from `guided` [B x C] (zero at the first step). The last
/// guided column is never read. Returns the C hidden states.
std::vector<Var> iglstm_forward(std::span<const Var> xs, Var guided, const LstmVars& layer);

struct ForwardOptions {
  bool intention_guidance = true;  // false feeds y_prev = 0 at every step
};

/// Per-batch inputs as tape variables.
struct InputVars {
  Var activity;  // [B x T x A]
  Var dynamic;   // [B x C x D]
  Var statics;   // [B x S]
  Var guided;    // [B x C] observed statuses
};

struct ForwardResult {
  Var logits;  // [B x C]
  Var probs;   // [B x C], sigmoid(logits)
};

/// Full network: activity path (summarize, IG-LSTM stack), dynamic path
/// (temporal dense stack), static path (dense stack forked C times), per-slice
/// concatenation, fusion temporal dense stack and a sigmoid head per slice.
ForwardResult forward(const ParamVars& params, const InputVars& inputs, const BlaConfig& config,
                      const ForwardOptions& options = {});

/// Batch tensors gathered from frame rows.
struct Batch {
  Tensor activity, dynamic, statics, labels, masks;
  std::size_t size() const { return labels.dim(0); }
};
Batch make_batch(const data::SnapshotFrame& frame, std::span<const std::size_t> rows);
Batch make_batch(const data::SnapshotFrame& frame, std::size_t begin, std::size_t end);

/// All C probabilities for rows [begin, end) of the frame, row-major
/// [rows x C], evaluated on one tape.
std::vector<double> predict_range(const data::SnapshotFrame& frame, const BlaParams& params,
                                  const BlaConfig& config, std::size_t begin, std::size_t end,
                                  const ForwardOptions& options = {});

/// Target-period attrition probability per user (output at t = C only).
std::vector<double> predict(const data::SnapshotFrame& frame, const BlaParams& params, const BlaConfig& config,
                            ExecPolicy policy = ExecPolicy::kParallel, const ForwardOptions& options = {});

/// All C per-snapshot probabilities, [N x C].
Tensor predict_all(const data::SnapshotFrame& frame, const BlaParams& params, const BlaConfig& config,
                   ExecPolicy policy = ExecPolicy::kParallel, const ForwardOptions& options = {});

/// Throws SchemaError if the frame's geometry differs from the config.
void check_compatible(const BlaConfig& config, const data::SnapshotFrame& frame);

}  // namespace bla::model
