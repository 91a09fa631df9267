#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bla/datapipe/frame.hpp"
#include "bla/model/network.hpp"

namespace bla::explain {

/// Gradient of one user's target-period score wrt each input.
struct SaliencyMap {
  std::string user_id;
  Tensor activity;  // [T x A]
  Tensor dynamic;   // [C x D]
  Tensor statics;   // [S]
};

enum class SaliencyTarget { kProbability, kLogit };

struct SaliencyOptions {
  SaliencyTarget target = SaliencyTarget::kProbability;
  model::ForwardOptions forward;
  std::size_t max_users = 0;  // 0: every user
};

/// Maps for rows [begin, end) from one backward pass of the summed target
/// scores. Rows do not interact, so each map equals its single-user gradient.
/// Observed statuses enter as constants.
std::vector<SaliencyMap> saliency_range(const data::SnapshotFrame& frame, const model::BlaParams& params,
                                        const model::BlaConfig& config, std::size_t begin, std::size_t end,
                                        const SaliencyOptions& options = {});

SaliencyMap saliency_single(const data::SnapshotFrame& frame, std::size_t row, const model::BlaParams& params,
                            const model::BlaConfig& config, const SaliencyOptions& options = {});

/// Maps for the first max_users rows (all when 0), computed shard-parallel.
std::vector<SaliencyMap> saliency(const data::SnapshotFrame& frame, const model::BlaParams& params,
                                  const model::BlaConfig& config, const SaliencyOptions& options = {},
                                  ExecPolicy policy = ExecPolicy::kParallel);

struct SignedImportance {
  Tensor dynamic;  // [C x D], mean over users
  Tensor statics;  // [S]
};

/// Coordinate-wise mean with sign kept. ContractError on an empty set.
SignedImportance aggregate_signed(std::span<const SaliencyMap> maps);

/// |gradient| averaged over users, then summed over metrics: one value per day.
std::vector<double> aggregate_activity(std::span<const SaliencyMap> maps);

struct CohortSaliency {
  std::vector<double> activity_importance;  // [T]
  Tensor dynamic_importance;                // [C x D]
  Tensor static_importance;                 // [S]
};
CohortSaliency aggregate(std::span<const SaliencyMap> maps);

/// Writes `label,<columns...>` then one row per entry of `row_labels`.
void export_heatmap(const Tensor& values, std::span<const std::string> row_labels, const std::string& label,
                    std::span<const std::string> columns, const std::filesystem::path& path);

/// activity_importance.csv (day,importance), dynamic_importance.csv
/// (snapshot x dynamic slots) and static_importance.csv (feature,importance).
void export_cohort(const CohortSaliency& cohort, std::span<const std::string> dynamic_slots,
                   std::span<const std::string> static_slots, const std::filesystem::path& dir);

}  // namespace bla::explain
