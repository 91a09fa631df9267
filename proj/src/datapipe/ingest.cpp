#include "bla/datapipe/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "bla/datapipe/csv.hpp"
#include "bla/error.hpp"

namespace bla::data {
namespace {

std::string where(const CsvReader& reader) {
  return reader.path().filename().string() + " row " + std::to_string(reader.line());
}

void require_header_prefix(const CsvReader& reader, std::initializer_list<std::string_view> prefix) {
  const auto& header = reader.header();
  std::size_t i = 0;
  for (std::string_view name : prefix) {
    if (i >= header.size() || header[i] != name) {
      throw ParseError(reader.path().string() + ": header must start with '" + std::string(name) +
                       "' in column " + std::to_string(i + 1));
    }
    ++i;
  }
}

std::unordered_map<std::string, std::size_t> index_users(const std::vector<std::string>& user_ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < user_ids.size(); ++i) index.emplace(user_ids[i], i);
  return index;
}

/// Maps schema features to header columns after the key columns.
std::vector<std::size_t> feature_columns(const CsvReader& reader, const FeatureEncoder& encoder) {
  std::vector<std::size_t> cols;
  for (const FeatureSpec& f : encoder.features()) cols.push_back(reader.column(f.name));
  return cols;
}

std::size_t parse_snapshot(const std::string& text, std::size_t snapshots, const CsvReader& reader) {
  const double v = parse_real(text, where(reader));
  if (v != std::floor(v) || v < 1.0 || v > static_cast<double>(snapshots)) {
    throw RangeError(where(reader) + ": snapshot '" + text + "' outside 1.." + std::to_string(snapshots));
  }
  return static_cast<std::size_t>(v) - 1;
}

bool written(double v) { return v != 0.0 || std::signbit(v); }

}  // namespace

ActivityLog load_activity_csv(const std::filesystem::path& path) {
  CsvReader reader(path);
  require_header_prefix(reader, {"user_id", "date"});
  ActivityLog log;
  log.metric_names.assign(reader.header().begin() + 2, reader.header().end());
  const std::size_t a = log.metric_names.size();
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() < 2 || row.size() > a + 2) {
      throw ParseError(where(reader) + ": expected " + std::to_string(a + 2) + " fields");
    }
    EventRecord rec;
    rec.user_id = row[0];
    try {
      rec.date = parse_date(row[1]);
    } catch (const ParseError& e) {
      throw ParseError(where(reader) + ": " + e.what());
    }
    rec.metrics.assign(a, 0.0);
    for (std::size_t k = 0; k + 2 < row.size(); ++k) rec.metrics[k] = parse_real(row[k + 2], where(reader));
    log.events.push_back(std::move(rec));
  }
  return log;
}

AlignResult align_and_pad(const ActivityLog& log, const Registrations& registrations,
                          const SnapshotConfig& config, std::size_t dynamic_width,
                          std::size_t static_width) {
  config.validate();
  std::map<std::string, Date> first_seen(registrations.begin(), registrations.end());
  for (const EventRecord& e : log.events) {
    if (registrations.contains(e.user_id)) continue;
    auto [it, inserted] = first_seen.emplace(e.user_id, e.date);
    if (!inserted) it->second = std::min(it->second, e.date);
  }
  std::vector<std::string> users;
  for (const auto& [id, date] : first_seen) users.push_back(id);

  const std::size_t a = log.metric_names.size(), c = config.snapshots();
  AlignResult result{make_frame(config, users, a, dynamic_width, static_width), 0};
  SnapshotFrame& frame = result.frame;
  const auto index = index_users(frame.user_ids);

  for (std::size_t i = 0; i < frame.size(); ++i) {
    const Date seen = first_seen.at(frame.user_ids[i]);
    for (std::size_t t = 0; t < c; ++t) frame.masks.at(i, t) = config.snapshot_end(t) < seen ? 0.0 : 1.0;
  }
  for (const EventRecord& e : log.events) {
    const auto day = config.day_index(e.date);
    const std::size_t i = index.at(e.user_id);
    if (!day || e.date < first_seen.at(e.user_id) || e.metrics.size() != a) {
      ++result.dropped_events;
      continue;
    }
    for (std::size_t k = 0; k < a; ++k) frame.activity.at(i, *day, k) += e.metrics[k];
  }
  return result;
}

std::size_t build_label_series(SnapshotFrame& frame, const AttritionEvents& events) {
  const std::size_t c = frame.snapshots();
  frame.labels = Tensor({frame.size(), c});
  const auto index = index_users(frame.user_ids);
  std::size_t ignored = 0;
  for (const auto& [user, dates] : events) {
    const auto it = index.find(user);
    for (const Date& d : dates) {
      const auto window = frame.config.label_window(d);
      if (it == index.end() || !window) {
        ++ignored;
        continue;
      }
      if (frame.masks.at(it->second, *window) != 0.0) frame.labels.at(it->second, *window) = 1.0;
    }
  }
  return ignored;
}

Tensor load_dynamic_csv(const std::filesystem::path& path, const SnapshotConfig& config,
                        const FeatureEncoder& encoder, const std::vector<std::string>& user_ids) {
  const std::size_t c = config.snapshots(), d = encoder.width();
  Tensor out({user_ids.size(), c, d});
  CsvReader reader(path);
  require_header_prefix(reader, {"user_id", "snapshot"});
  const auto cols = feature_columns(reader, encoder);
  const auto index = index_users(user_ids);
  std::vector<std::string> row, cells(cols.size());
  while (reader.next(row)) {
    if (row.size() != reader.header().size()) throw ParseError(where(reader) + ": wrong field count");
    const std::size_t t = parse_snapshot(row[1], c, reader);
    const auto it = index.find(row[0]);
    if (it == index.end()) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) cells[j] = row[cols[j]];
    try {
      encoder.encode(cells, std::span<double>(out.raw() + (it->second * c + t) * d, d));
    } catch (const ParseError& e) {
      throw ParseError(where(reader) + ": " + e.what());
    }
  }
  return out;
}

Tensor load_static_csv(const std::filesystem::path& path, const FeatureEncoder& encoder,
                       const std::vector<std::string>& user_ids) {
  const std::size_t s = encoder.width();
  Tensor out({user_ids.size(), s});
  CsvReader reader(path);
  require_header_prefix(reader, {"user_id"});
  const auto cols = feature_columns(reader, encoder);
  const auto index = index_users(user_ids);
  std::vector<std::string> row, cells(cols.size());
  while (reader.next(row)) {
    if (row.size() != reader.header().size()) throw ParseError(where(reader) + ": wrong field count");
    const auto it = index.find(row[0]);
    if (it == index.end()) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) cells[j] = row[cols[j]];
    try {
      encoder.encode(cells, std::span<double>(out.raw() + it->second * s, s));
    } catch (const ParseError& e) {
      throw ParseError(where(reader) + ": " + e.what());
    }
  }
  return out;
}

LabelTable load_labels_csv(const std::filesystem::path& path, std::size_t snapshots) {
  CsvReader reader(path);
  require_header_prefix(reader, {"user_id", "snapshot", "status"});
  struct Row {
    std::string user;
    std::size_t t;
    double status;
  };
  std::vector<Row> rows;
  std::set<std::string> users;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() != 3) throw ParseError(where(reader) + ": expected user_id,snapshot,status");
    const std::size_t t = parse_snapshot(row[1], snapshots, reader);
    if (row[2] != "0" && row[2] != "1") throw ParseError(where(reader) + ": status must be 0 or 1");
    rows.push_back({row[0], t, row[2] == "1" ? 1.0 : 0.0});
    users.insert(row[0]);
  }
  LabelTable table;
  table.user_ids.assign(users.begin(), users.end());
  table.labels = Tensor({users.size(), snapshots});
  table.masks = Tensor({users.size(), snapshots});
  const auto index = index_users(table.user_ids);
  for (const Row& r : rows) {
    const std::size_t i = index.at(r.user);
    table.labels.at(i, r.t) = r.status;
    table.masks.at(i, r.t) = 1.0;
  }
  return table;
}

FramePaths FramePaths::in(const std::filesystem::path& dir) {
  return {dir / "activity.csv", dir / "dynamic.csv", dir / "static.csv", dir / "labels.csv", dir / "schema.json"};
}

SnapshotFrame load_frame(const FramePaths& paths, const Schema& schema) {
  const SnapshotConfig& config = schema.snapshot;
  config.validate();
  const std::size_t c = config.snapshots();
  LabelTable table = load_labels_csv(paths.labels, c);

  ActivityLog log = load_activity_csv(paths.activity);
  if (log.metric_names != schema.activity_metrics) {
    throw SchemaError(paths.activity.string() + ": activity columns do not match the schema metrics");
  }
  Registrations first_seen;
  for (std::size_t i = 0; i < table.user_ids.size(); ++i) {
    std::size_t t = 0;
    while (t < c && table.masks.at(i, t) == 0.0) ++t;
    if (t == c) throw ContractError("user " + table.user_ids[i] + " has no valid snapshot");
    first_seen[table.user_ids[i]] = config.day(t * config.window_days);
  }
  // Drop log rows of users unknown to the labels file before alignment.
  std::erase_if(log.events, [&](const EventRecord& e) { return !first_seen.contains(e.user_id); });

  const FeatureEncoder dyn = schema.dynamic_encoder(), stat = schema.static_encoder();
  AlignResult aligned = align_and_pad(log, first_seen, config, dyn.width(), stat.width());
  SnapshotFrame frame = std::move(aligned.frame);
  frame.labels = std::move(table.labels);
  frame.masks = std::move(table.masks);
  if (dyn.width() > 0 || std::filesystem::exists(paths.dynamic)) {
    frame.dynamic = load_dynamic_csv(paths.dynamic, config, dyn, frame.user_ids);
  }
  if (stat.width() > 0 || std::filesystem::exists(paths.statics)) {
    frame.statics = load_static_csv(paths.statics, stat, frame.user_ids);
  }
  frame.validate();
  return frame;
}

void write_frame(const SnapshotFrame& frame, const Schema& schema, const FramePaths& paths) {
  frame.validate();
  const SnapshotConfig& config = frame.config;
  const std::size_t n = frame.size(), c = frame.snapshots(), a = frame.metrics();
  const FeatureEncoder dyn = schema.dynamic_encoder(), stat = schema.static_encoder();
  if (schema.snapshot != config || schema.activity_metrics.size() != a || dyn.width() != frame.dynamic_width() ||
      stat.width() != frame.static_width()) {
    throw SchemaError("schema does not describe the frame being written");
  }

  {
    auto out = open_output(paths.activity);
    out << "user_id,date";
    for (const auto& m : schema.activity_metrics) out << ',' << m;
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < config.observation_days; ++d) {
        const double* row = frame.activity.raw() + (i * config.observation_days + d) * a;
        if (!std::any_of(row, row + a, written)) continue;
        out << frame.user_ids[i] << ',' << format_date(config.day(d));
        for (std::size_t k = 0; k < a; ++k) out << ',' << format_real(row[k]);
        out << '\n';
      }
    }
    if (!out) throw IoError("failed writing " + paths.activity.string());
  }
  {
    auto out = open_output(paths.dynamic);
    out << "user_id,snapshot";
    for (const auto& f : schema.dynamic_features) out << ',' << f.name;
    out << '\n';
    const std::size_t d = dyn.width();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < c; ++t) {
        out << frame.user_ids[i] << ',' << t + 1;
        const auto cells = dyn.decode(std::span<const double>(frame.dynamic.raw() + (i * c + t) * d, d));
        for (const auto& cell : cells) out << ',' << cell;
        out << '\n';
      }
    }
    if (!out) throw IoError("failed writing " + paths.dynamic.string());
  }
  {
    auto out = open_output(paths.statics);
    out << "user_id";
    for (const auto& f : schema.static_features) out << ',' << f.name;
    out << '\n';
    const std::size_t s = stat.width();
    for (std::size_t i = 0; i < n; ++i) {
      out << frame.user_ids[i];
      for (const auto& cell : stat.decode(std::span<const double>(frame.statics.raw() + i * s, s))) out << ',' << cell;
      out << '\n';
    }
    if (!out) throw IoError("failed writing " + paths.statics.string());
  }
  {
    auto out = open_output(paths.labels);
    out << "user_id,snapshot,status\n";
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < c; ++t) {
        if (frame.masks.at(i, t) == 0.0) continue;
        out << frame.user_ids[i] << ',' << t + 1 << ',' << (frame.labels.at(i, t) != 0.0 ? 1 : 0) << '\n';
      }
    }
    if (!out) throw IoError("failed writing " + paths.labels.string());
  }
  save_schema(schema, paths.schema);
}

}  // namespace bla::data
