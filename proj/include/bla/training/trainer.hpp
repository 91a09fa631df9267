#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bla/datapipe/frame.hpp"
#include "bla/model/network.hpp"
#include "bla/training/adam.hpp"

namespace bla::train {

struct TrainConfig {
  std::size_t batch_size = 128;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double learning_rate = 0.001;
  double lr_decay = 1e-3;
  AdamSettings adam;
  std::uint64_t seed = 0;

  /// Ablation switches: y_prev = 0 everywhere, or loss on the target snapshot only.
  bool intention_guidance = true;
  bool target_only = false;
  ExecPolicy policy = ExecPolicy::kParallel;

  /// Throws ConfigError on non-positive settings. Patience at or above
  /// max_epochs simply never triggers early stopping.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double lr_effective = 0.0;
};

struct FitResult {
  model::BlaParams params;  // best-validation parameters
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 0: the initial parameters were never beaten
  double best_valid_loss = 0.0;
};

/// Loss over `rows` of `frame` and its gradient accumulated into each
/// Param::grad (which is overwritten). Rows are processed in fixed shards and
/// shard gradients are summed in shard order for every policy.
double batch_gradient(const data::SnapshotFrame& frame, std::span<const std::size_t> rows, model::BlaParams& params,
                      const model::BlaConfig& config, std::span<const double> zeta,
                      const model::ForwardOptions& options, ExecPolicy policy);

/// Unweighted cross-entropy of the target snapshot, averaged over users whose
/// target record is unmasked.
double validation_loss(const data::SnapshotFrame& frame, const model::BlaParams& params,
                       const model::BlaConfig& config, const model::ForwardOptions& options = {},
                       ExecPolicy policy = ExecPolicy::kParallel);

/// Seeded mini-batch Adam with early stopping on validation_loss. Starts from
/// Glorot parameters drawn from train_config.seed.
FitResult fit(const data::SnapshotFrame& train, const data::SnapshotFrame& valid, const model::BlaConfig& config,
              const TrainConfig& train_config, double k);

/// Same, starting from `initial`.
FitResult fit_from(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                   const model::BlaConfig& config, const TrainConfig& train_config, double k,
                   model::BlaParams initial);

struct DecayTuning {
  double best_k = 1.0;
  std::vector<double> grid;
  std::vector<double> valid_losses;  // best validation loss per grid point
  FitResult best_fit;
};

std::vector<double> default_k_grid();

/// One fit per k, all from the same seed; argmin validation loss, ties to the larger k.
DecayTuning tune_decay_k(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                         const model::BlaConfig& config, const TrainConfig& train_config, std::vector<double> grid);

/// `epoch,train_loss,valid_loss,lr_effective`
void write_history(std::span<const EpochRecord> history, const std::filesystem::path& path);

}  // namespace bla::train
