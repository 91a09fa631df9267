#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bla/datapipe/calendar.hpp"

namespace bla::data {

/// One raw input column. Categorical columns expand to one slot per level.
struct FeatureSpec {
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;  // frozen dictionary for categorical columns

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Maps raw cells to encoded slots: numeric cells pass through, categorical
/// cells become one-hot blocks. Unknown levels and empty cells encode as zeros.
class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  explicit FeatureEncoder(std::vector<FeatureSpec> features);

  std::size_t width() const noexcept { return width_; }
  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  std::vector<std::string> slot_names() const;

  /// `cells[j]` is the raw text of feature j. Writes width() values.
  void encode(std::span<const std::string> cells, std::span<double> out) const;
  /// Inverse of encode for values that encode produced; all-zero one-hot
  /// blocks decode to an empty cell.
  std::vector<std::string> decode(std::span<const double> slots) const;

 private:
  std::vector<FeatureSpec> features_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

/// Declares the calendar geometry and the raw columns of every input file.
struct Schema {
  SnapshotConfig snapshot;
  std::vector<std::string> activity_metrics;
  std::vector<FeatureSpec> dynamic_features;
  std::vector<FeatureSpec> static_features;

  FeatureEncoder dynamic_encoder() const { return FeatureEncoder(dynamic_features); }
  FeatureEncoder static_encoder() const { return FeatureEncoder(static_features); }

  friend bool operator==(const Schema&, const Schema&) = default;
};

Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);
std::string schema_to_json(const Schema& schema);
Schema schema_from_json(std::string_view text);

/// Fills empty level lists of categorical features from the distinct values
/// (sorted) found in `csv_path`, e.g. a training-split static CSV.
void freeze_levels(std::vector<FeatureSpec>& features, const std::filesystem::path& csv_path);

}  // namespace bla::data
