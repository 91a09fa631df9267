#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace bla::data {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD; throws ParseError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Calendar geometry shared by every user. Observation days are
/// [gamma - T + 1, gamma]; activity snapshot t (0-based) covers days
/// [t * tau, (t + 1) * tau) of that span. The status label of snapshot t is
/// the attrition status in the following window, so label windows tile
/// [gamma - T + 1 + tau, gamma + tau] and the last one is the target period
/// [gamma + 1, gamma + tau]. All window bounds are inclusive.
struct SnapshotConfig {
  Date gamma{};
  std::size_t observation_days = 0;  // T
  std::size_t window_days = 0;       // tau

  /// C = T / tau.
  std::size_t snapshots() const noexcept { return window_days == 0 ? 0 : observation_days / window_days; }
  Date first_day() const;
  Date day(std::size_t index) const;

  /// Day offset of `date` inside the observation span, if it falls there.
  std::optional<std::size_t> day_index(Date date) const;
  /// Label window (0-based snapshot index) containing `date`, if any.
  std::optional<std::size_t> label_window(Date date) const;
  /// Last calendar day of activity snapshot t.
  Date snapshot_end(std::size_t t) const;

  /// Throws ConfigError unless tau >= 1, T >= tau and T % tau == 0.
  void validate() const;

  friend bool operator==(const SnapshotConfig&, const SnapshotConfig&) = default;
};

}  // namespace bla::data
