#include "bla/datapipe/frame.hpp"

#include <algorithm>

#include "bla/error.hpp"

namespace bla::data {

std::vector<double> SnapshotFrame::target_labels() const {
  const std::size_t c = snapshots();
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = labels.at(i, c - 1);
  return out;
}

void SnapshotFrame::validate() const {
  config.validate();
  const std::size_t n = size(), c = snapshots(), tau = config.window_days;
  auto check_shape = [](const Tensor& t, std::size_t rank, std::size_t n_rows, const char* what) {
    if (t.rank() != rank || t.dim(0) != n_rows) {
      throw ContractError(std::string("frame ") + what + " has shape " + shape_string(t.shape()) +
                          ", expected " + std::to_string(n_rows) + " user rows");
    }
  };
  check_shape(activity, 3, n, "activity");
  check_shape(dynamic, 3, n, "dynamic");
  check_shape(statics, 2, n, "static");
  check_shape(labels, 2, n, "labels");
  check_shape(masks, 2, n, "masks");
  if (activity.dim(1) != config.observation_days || dynamic.dim(1) != c || labels.dim(1) != c ||
      masks.dim(1) != c) {
    throw ContractError("frame time axes disagree with snapshot config");
  }
  const std::size_t a = activity.dim(2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < c; ++t) {
      const double y = labels.at(i, t), m = masks.at(i, t);
      if ((y != 0.0 && y != 1.0) || (m != 0.0 && m != 1.0)) {
        throw ContractError("labels and masks must be exactly 0 or 1 (user " + user_ids[i] + ")");
      }
      if (m != 0.0) continue;
      if (y != 0.0) throw ContractError("masked snapshot carries a label (user " + user_ids[i] + ")");
      for (std::size_t d = t * tau; d < (t + 1) * tau; ++d) {
        for (std::size_t k = 0; k < a; ++k) {
          if (activity.at(i, d, k) != 0.0) {
            throw ContractError("masked snapshot has activity (user " + user_ids[i] + ")");
          }
        }
      }
    }
  }
}

SnapshotFrame make_frame(const SnapshotConfig& config, std::vector<std::string> user_ids,
                         std::size_t metrics, std::size_t dynamic_width, std::size_t static_width) {
  SnapshotFrame f;
  f.config = config;
  const std::size_t n = user_ids.size(), c = config.snapshots();
  f.user_ids = std::move(user_ids);
  f.activity = Tensor({n, config.observation_days, metrics});
  f.dynamic = Tensor({n, c, dynamic_width});
  f.statics = Tensor({n, static_width});
  f.labels = Tensor({n, c});
  f.masks = Tensor({n, c});
  return f;
}

namespace {

Tensor gather_rows(const Tensor& src, std::span<const std::size_t> indices) {
  Shape shape = src.shape();
  const std::size_t row = shape_size(Shape(shape.begin() + 1, shape.end()));
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t from = indices[r];
    if (from >= src.dim(0)) throw DimensionError("subset index out of range");
    std::copy_n(src.raw() + from * row, row, out.raw() + r * row);
  }
  return out;
}

}  // namespace

SnapshotFrame subset(const SnapshotFrame& frame, std::span<const std::size_t> indices) {
  SnapshotFrame out;
  out.config = frame.config;
  for (std::size_t i : indices) out.user_ids.push_back(frame.user_ids.at(i));
  out.activity = gather_rows(frame.activity, indices);
  out.dynamic = gather_rows(frame.dynamic, indices);
  out.statics = gather_rows(frame.statics, indices);
  out.labels = gather_rows(frame.labels, indices);
  out.masks = gather_rows(frame.masks, indices);
  return out;
}

}  // namespace bla::data
