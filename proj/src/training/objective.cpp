#include "bla/training/objective.hpp"

#include <cmath>

#include "bla/diffcore/ops.hpp"
#include "bla/error.hpp"

namespace bla::train {

std::vector<double> decay_weights(double k, std::size_t snapshots) {
  if (snapshots == 0) throw RangeError("decay schedule needs at least one snapshot");
  if (k == 0.0) {
    std::vector<double> w(snapshots, 0.0);
    w.back() = 1.0;
    return w;
  }
  if (!(k > 0.0 && k <= 1.0)) throw RangeError("decay speed k must lie in (0, 1], got " + std::to_string(k));
  std::vector<double> w(snapshots);
  double acc = 1.0;
  for (std::size_t t = snapshots; t-- > 0;) {
    w[t] = acc;
    acc *= k;
  }
  return w;
}

Tensor loss_weights(const Tensor& masks, std::span<const double> zeta) {
  if (masks.rank() != 2 || masks.dim(1) != zeta.size()) {
    throw DimensionError("masks " + shape_string(masks.shape()) + " do not match " + std::to_string(zeta.size()) +
                         " decay weights");
  }
  Tensor w = masks;
  for (std::size_t i = 0; i < w.dim(0); ++i) {
    for (std::size_t t = 0; t < w.dim(1); ++t) w.at(i, t) *= zeta[t];
  }
  return w;
}

Var attrition_loss(Var probs, const Tensor& labels, const Tensor& masks, std::span<const double> zeta, double n) {
  if (!(n > 0.0)) throw RangeError("loss normalizer must be positive");
  return scale(weighted_bce(probs, labels, loss_weights(masks, zeta)), 1.0 / n);
}

double attrition_loss_value(const Tensor& probs, const Tensor& labels, const Tensor& masks,
                            std::span<const double> zeta) {
  Tape tape;
  return attrition_loss(tape.constant(probs), labels, masks, zeta, static_cast<double>(probs.dim(0))).value()[0];
}

}  // namespace bla::train
