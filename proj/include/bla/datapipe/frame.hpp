#pragma once

#include <span>
#include <string>
#include <vector>

#include "bla/datapipe/calendar.hpp"
#include "bla/diffcore/tensor.hpp"

namespace bla::data {

/// Calendar-aligned tensors for a user cohort. Row i of every tensor belongs
/// to user_ids[i].
struct SnapshotFrame {
  SnapshotConfig config;
  std::vector<std::string> user_ids;
  Tensor activity;  // [N x T x A] daily metrics, zero-padded
  Tensor dynamic;   // [N x C x D]
  Tensor statics;   // [N x S]
  Tensor labels;    // [N x C] status y_i^(t), 0 or 1
  Tensor masks;     // [N x C] validity eta_i^(t), 0 or 1

  std::size_t size() const noexcept { return user_ids.size(); }
  std::size_t snapshots() const noexcept { return config.snapshots(); }
  std::size_t metrics() const { return activity.dim(2); }
  std::size_t dynamic_width() const { return dynamic.dim(2); }
  std::size_t static_width() const { return statics.dim(1); }

  /// Target-period labels labels[:, C-1].
  std::vector<double> target_labels() const;

  /// Throws ContractError if any frame invariant is violated.
  void validate() const;

  friend bool operator==(const SnapshotFrame&, const SnapshotFrame&) = default;
};

/// Empty frame with all tensors allocated for `n` users.
SnapshotFrame make_frame(const SnapshotConfig& config, std::vector<std::string> user_ids,
                         std::size_t metrics, std::size_t dynamic_width, std::size_t static_width);

/// Rows `indices` of `frame`, in the given order.
SnapshotFrame subset(const SnapshotFrame& frame, std::span<const std::size_t> indices);

}  // namespace bla::data
