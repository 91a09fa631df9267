#pragma once

#include <vector>

#include "bla/datapipe/frame.hpp"
#include "bla/training/trainer.hpp"

namespace bla::eval {

/// Hand-aggregated per-user vector: activity summed per metric within each
/// snapshot window (C*A), then dynamic (C*D), then statics (S).
Tensor flatten_features(const data::SnapshotFrame& frame);

/// Logistic regression on standardized flattened features.
struct LogisticModel {
  std::vector<double> mean, scale;  // standardization fitted on training users
  Tensor weight;                    // [F x 1]
  Tensor bias;                      // [1]
};

/// Users whose target record is unmasked.
std::vector<std::size_t> target_rows(const data::SnapshotFrame& frame);

/// Mini-batch Adam on the mean target-period cross-entropy from zero
/// weights, with the same epoch/patience protocol as the network.
LogisticModel lr_baseline_fit(const data::SnapshotFrame& train, const data::SnapshotFrame& valid,
                              const train::TrainConfig& config);

/// Target-period probability per user.
std::vector<double> lr_baseline_predict(const LogisticModel& model, const data::SnapshotFrame& frame);

/// Mean target cross-entropy over unmasked target records.
double lr_baseline_loss(const LogisticModel& model, const data::SnapshotFrame& frame);

}  // namespace bla::eval
