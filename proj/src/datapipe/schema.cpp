#include "bla/datapipe/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bla/datapipe/csv.hpp"
#include "bla/error.hpp"
#include "json.hpp"

namespace bla::data {

using nlohmann::json;

FeatureEncoder::FeatureEncoder(std::vector<FeatureSpec> features) : features_(std::move(features)) {
  for (const FeatureSpec& f : features_) {
    offsets_.push_back(width_);
    width_ += f.categorical ? f.levels.size() : 1;
  }
}

std::vector<std::string> FeatureEncoder::slot_names() const {
  std::vector<std::string> names;
  for (const FeatureSpec& f : features_) {
    if (!f.categorical) {
      names.push_back(f.name);
      continue;
    }
    for (const std::string& level : f.levels) names.push_back(f.name + "=" + level);
  }
  return names;
}

void FeatureEncoder::encode(std::span<const std::string> cells, std::span<double> out) const {
  if (cells.size() != features_.size() || out.size() != width_) {
    throw DimensionError("feature encoder: expected " + std::to_string(features_.size()) + " cells");
  }
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const FeatureSpec& f = features_[j];
    double* slot = out.data() + offsets_[j];
    if (!f.categorical) {
      *slot = parse_real(cells[j], f.name);
      continue;
    }
    const std::size_t n = f.levels.size();
    for (std::size_t l = 0; l < n; ++l) slot[l] = f.levels[l] == cells[j] ? 1.0 : 0.0;
  }
}

std::vector<std::string> FeatureEncoder::decode(std::span<const double> slots) const {
  if (slots.size() != width_) throw DimensionError("feature decoder: wrong slot count");
  std::vector<std::string> cells;
  for (std::size_t j = 0; j < features_.size(); ++j) {
    const FeatureSpec& f = features_[j];
    const double* slot = slots.data() + offsets_[j];
    if (!f.categorical) {
      cells.push_back(format_real(*slot));
      continue;
    }
    std::string cell;
    for (std::size_t l = 0; l < f.levels.size(); ++l) {
      if (slot[l] == 1.0) cell = f.levels[l];
    }
    cells.push_back(cell);
  }
  return cells;
}

namespace {

json features_to_json(const std::vector<FeatureSpec>& features) {
  json out = json::array();
  for (const FeatureSpec& f : features) {
    json item = {{"name", f.name}};
    if (f.categorical) item["levels"] = f.levels;
    out.push_back(item);
  }
  return out;
}

std::vector<FeatureSpec> features_from_json(const json& arr) {
  std::vector<FeatureSpec> out;
  for (const json& item : arr) {
    FeatureSpec f;
    f.name = item.at("name").get<std::string>();
    if (item.contains("levels")) {
      f.categorical = true;
      f.levels = item.at("levels").get<std::vector<std::string>>();
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

std::string schema_to_json(const Schema& schema) {
  json j = {
      {"gamma", format_date(schema.snapshot.gamma)},
      {"observation_days", schema.snapshot.observation_days},
      {"window_days", schema.snapshot.window_days},
      {"activity_metrics", schema.activity_metrics},
      {"dynamic_features", features_to_json(schema.dynamic_features)},
      {"static_features", features_to_json(schema.static_features)},
  };
  return j.dump(2) + "\n";
}

Schema schema_from_json(std::string_view text) {
  Schema schema;
  try {
    const json j = json::parse(text);
    schema.snapshot.gamma = parse_date(j.at("gamma").get<std::string>());
    schema.snapshot.observation_days = j.at("observation_days").get<std::size_t>();
    schema.snapshot.window_days = j.at("window_days").get<std::size_t>();
    schema.activity_metrics = j.at("activity_metrics").get<std::vector<std::string>>();
    schema.dynamic_features = features_from_json(j.value("dynamic_features", json::array()));
    schema.static_features = features_from_json(j.value("static_features", json::array()));
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }
  schema.snapshot.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return schema_from_json(buf.str());
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << schema_to_json(schema);
  if (!out) throw IoError("failed writing " + path.string());
}

void freeze_levels(std::vector<FeatureSpec>& features, const std::filesystem::path& csv_path) {
  CsvReader reader(csv_path);
  std::vector<std::pair<FeatureSpec*, std::size_t>> targets;
  for (FeatureSpec& f : features) {
    if (f.categorical && f.levels.empty()) targets.emplace_back(&f, reader.column(f.name));
  }
  std::vector<std::set<std::string>> seen(targets.size());
  std::vector<std::string> row;
  while (reader.next(row)) {
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const std::size_t col = targets[k].second;
      if (col < row.size() && !row[col].empty()) seen[k].insert(row[col]);
    }
  }
  for (std::size_t k = 0; k < targets.size(); ++k) {
    targets[k].first->levels.assign(seen[k].begin(), seen[k].end());
  }
}

}  // namespace bla::data
