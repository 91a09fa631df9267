#include "bla/explain/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "bla/datapipe/csv.hpp"
#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"

namespace bla::explain {
namespace {

Tensor row_of(const Tensor& batch, std::size_t row) {
  Shape shape(batch.shape().begin() + 1, batch.shape().end());
  const std::size_t width = shape_size(shape);
  return Tensor(shape, std::vector<double>(batch.raw() + row * width, batch.raw() + (row + 1) * width));
}

void add_scaled(Tensor& acc, const Tensor& x, double factor, bool absolute) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += factor * (absolute ? std::abs(x[i]) : x[i]);
}

}  // namespace

std::vector<SaliencyMap> saliency_range(const data::SnapshotFrame& frame, const model::BlaParams& params,
                                        const model::BlaConfig& config, std::size_t begin, std::size_t end,
                                        const SaliencyOptions& options) {
  model::check_compatible(config, frame);
  if (begin >= end || end > frame.size()) throw RangeError("saliency rows out of range");
  const model::Batch batch = model::make_batch(frame, begin, end);
  Tape tape;
  const model::ParamVars pv = model::bind_params_detached(tape, params, false);
  const model::InputVars in{tape.input(batch.activity), tape.input(batch.dynamic), tape.input(batch.statics),
                            tape.constant(batch.labels)};
  const model::ForwardResult out = model::forward(pv, in, config, options.forward);
  const std::size_t c = config.snapshots();
  const Var scores = options.target == SaliencyTarget::kLogit ? out.logits : out.probs;
  tape.backward(sum(slice_cols(scores, c - 1, c)));

  std::vector<SaliencyMap> maps;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    maps.push_back({frame.user_ids[begin + r], row_of(in.activity.grad(), r), row_of(in.dynamic.grad(), r),
                    row_of(in.statics.grad(), r)});
  }
  return maps;
}

SaliencyMap saliency_single(const data::SnapshotFrame& frame, std::size_t row, const model::BlaParams& params,
                            const model::BlaConfig& config, const SaliencyOptions& options) {
  return std::move(saliency_range(frame, params, config, row, row + 1, options).front());
}

std::vector<SaliencyMap> saliency(const data::SnapshotFrame& frame, const model::BlaParams& params,
                                  const model::BlaConfig& config, const SaliencyOptions& options, ExecPolicy policy) {
  const std::size_t n = options.max_users == 0 ? frame.size() : std::min(frame.size(), options.max_users);
  std::vector<SaliencyMap> maps(n);
  for_each_shard(n, kDefaultShardSize, policy, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<SaliencyMap> part = saliency_range(frame, params, config, begin, end, options);
    std::move(part.begin(), part.end(), maps.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return maps;
}

SignedImportance aggregate_signed(std::span<const SaliencyMap> maps) {
  if (maps.empty()) throw ContractError("cannot aggregate an empty set of saliency maps");
  SignedImportance out{Tensor(maps[0].dynamic.shape()), Tensor(maps[0].statics.shape())};
  const double w = 1.0 / static_cast<double>(maps.size());
  for (const SaliencyMap& m : maps) {
    if (m.dynamic.shape() != out.dynamic.shape() || m.statics.shape() != out.statics.shape()) {
      throw DimensionError("saliency maps of different shapes");
    }
    add_scaled(out.dynamic, m.dynamic, w, false);
    add_scaled(out.statics, m.statics, w, false);
  }
  return out;
}

std::vector<double> aggregate_activity(std::span<const SaliencyMap> maps) {
  if (maps.empty()) throw ContractError("cannot aggregate an empty set of saliency maps");
  Tensor mean(maps[0].activity.shape());
  const double w = 1.0 / static_cast<double>(maps.size());
  for (const SaliencyMap& m : maps) {
    if (m.activity.shape() != mean.shape()) throw DimensionError("saliency maps of different shapes");
    add_scaled(mean, m.activity, w, true);
  }
  std::vector<double> curve(mean.dim(0), 0.0);
  for (std::size_t d = 0; d < mean.dim(0); ++d) {
    for (std::size_t a = 0; a < mean.dim(1); ++a) curve[d] += mean.at(d, a);
  }
  return curve;
}

CohortSaliency aggregate(std::span<const SaliencyMap> maps) {
  SignedImportance signed_part = aggregate_signed(maps);
  return {aggregate_activity(maps), std::move(signed_part.dynamic), std::move(signed_part.statics)};
}

void export_heatmap(const Tensor& values, std::span<const std::string> row_labels, const std::string& label,
                    std::span<const std::string> columns, const std::filesystem::path& path) {
  const std::size_t rows = row_labels.size(), cols = columns.size();
  if (values.size() != rows * cols) {
    throw DimensionError("heatmap " + shape_string(values.shape()) + " vs " + std::to_string(rows) + " rows x " +
                         std::to_string(cols) + " columns");
  }
  std::ofstream out = data::open_output(path);
  out << label;
  for (const std::string& c : columns) out << ',' << c;
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    out << row_labels[r];
    for (std::size_t c = 0; c < cols; ++c) out << ',' << data::format_real(values[r * cols + c]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void export_cohort(const CohortSaliency& cohort, std::span<const std::string> dynamic_slots,
                   std::span<const std::string> static_slots, const std::filesystem::path& dir) {
  const std::vector<std::string> value{"importance"};
  std::vector<std::string> days, snapshots;
  for (std::size_t d = 0; d < cohort.activity_importance.size(); ++d) days.push_back(std::to_string(d + 1));
  for (std::size_t t = 0; t < cohort.dynamic_importance.dim(0); ++t) snapshots.push_back(std::to_string(t + 1));
  export_heatmap(Tensor({days.size()}, cohort.activity_importance), days, "day", value, dir / "activity_importance.csv");
  export_heatmap(cohort.dynamic_importance, snapshots, "snapshot", dynamic_slots, dir / "dynamic_importance.csv");
  export_heatmap(cohort.static_importance, static_slots, "feature", value, dir / "static_importance.csv");
}

}  // namespace bla::explain
