#pragma once

#include <cstddef>
#include <vector>

#include "bla/datapipe/frame.hpp"

namespace bla::model {

/// Architecture of the three-path network. Input geometry (T, tau, A, D, S)
/// must match the data; layer widths default to the published architecture.
struct BlaConfig {
  std::size_t observation_days = 0;  // T
  std::size_t window_days = 0;       // tau
  std::size_t metrics = 0;           // A
  std::size_t dynamic_width = 0;     // D after encoding; 0 disables the dynamic path
  std::size_t static_width = 0;      // S after encoding; 0 disables the static path

  std::size_t conv_kernels = 14;
  std::size_t conv_window = 0;  // M; 0 means tau
  std::size_t conv_stride = 0;  // 0 means tau
  std::vector<std::size_t> lstm_units{30, 15};
  std::vector<std::size_t> dynamic_hidden{30, 15};
  std::vector<std::size_t> static_hidden{30, 15};
  std::vector<std::size_t> fusion_hidden{30, 15};

  std::size_t snapshots() const noexcept { return window_days == 0 ? 0 : observation_days / window_days; }
  std::size_t window() const noexcept { return conv_window == 0 ? window_days : conv_window; }
  std::size_t stride() const noexcept { return conv_stride == 0 ? window_days : conv_stride; }
  /// Number of steps the summarization conv emits.
  std::size_t conv_steps() const;

  /// Throws ConfigError unless the conv emits exactly C steps and every
  /// layer has at least one unit.
  void validate() const;

  /// Default architecture sized to `frame`.
  static BlaConfig for_frame(const data::SnapshotFrame& frame);

  friend bool operator==(const BlaConfig&, const BlaConfig&) = default;
};

}  // namespace bla::model
