#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bla/datapipe/calendar.hpp"
#include "bla/datapipe/frame.hpp"
#include "bla/datapipe/schema.hpp"

namespace bla::data {

/// One (user, day) row of the activity log.
struct EventRecord {
  std::string user_id;
  Date date;
  std::vector<double> metrics;
};

struct ActivityLog {
  std::vector<std::string> metric_names;
  std::vector<EventRecord> events;
};

/// Reads `user_id,date,<metric...>`. Empty metric cells read as 0.
/// Malformed dates or numbers raise ParseError naming the row.
ActivityLog load_activity_csv(const std::filesystem::path& path);

/// First-seen (registration) date per user.
using Registrations = std::map<std::string, Date>;

struct AlignResult {
  SnapshotFrame frame;  // activity and masks filled; other tensors zero
  std::size_t dropped_events = 0;
};

/// Places every event on the shared calendar. Users are the union of
/// `registrations` keys and event users, sorted by id; a user without a
/// registration entry is first seen on their earliest event. Events outside
/// the observation span or before the user's first-seen date are dropped and
/// counted. mask[i][t] = 0 iff snapshot t ends before user i is first seen.
/// `dynamic_width` and `static_width` size the (zero) remaining tensors.
AlignResult align_and_pad(const ActivityLog& log, const Registrations& registrations,
                          const SnapshotConfig& config, std::size_t dynamic_width = 0,
                          std::size_t static_width = 0);

/// Attrition timestamps per user.
using AttritionEvents = std::map<std::string, std::vector<Date>>;

/// Sets labels[i][t] = 1 iff user i has an attrition event inside label
/// window t, for unmasked (i, t). Returns the number of timestamps ignored
/// because they fall outside every label window.
std::size_t build_label_series(SnapshotFrame& frame, const AttritionEvents& events);

/// `user_id,snapshot,<feature...>`, snapshot in 1..C. Users absent from
/// `user_ids` are skipped; missing (user, snapshot) rows stay zero.
Tensor load_dynamic_csv(const std::filesystem::path& path, const SnapshotConfig& config,
                        const FeatureEncoder& encoder, const std::vector<std::string>& user_ids);

/// `user_id,<feature...>`.
Tensor load_static_csv(const std::filesystem::path& path, const FeatureEncoder& encoder,
                       const std::vector<std::string>& user_ids);

struct LabelTable {
  std::vector<std::string> user_ids;  // sorted
  Tensor labels;                      // [N x C]
  Tensor masks;                       // [N x C]
};

/// `user_id,snapshot,status`; a (user, snapshot) row marks the snapshot valid,
/// an absent row leaves it masked.
LabelTable load_labels_csv(const std::filesystem::path& path, std::size_t snapshots);

/// Locations of the five files describing one cohort.
struct FramePaths {
  std::filesystem::path activity, dynamic, statics, labels, schema;

  static FramePaths in(const std::filesystem::path& dir);
};

/// Assembles a frame from CSVs. The user set and masks come from the labels
/// file; each user's activity before their first valid snapshot is dropped.
SnapshotFrame load_frame(const FramePaths& paths, const Schema& schema);

/// Writes the four CSVs and the schema so that load_frame reproduces `frame`
/// bit-exactly.
void write_frame(const SnapshotFrame& frame, const Schema& schema, const FramePaths& paths);

}  // namespace bla::data
