#pragma once

#include <cstddef>
#include <vector>

#include "bla/diffcore/tape.hpp"

namespace bla::train {

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments per parameter and the number of steps taken.
struct AdamState {
  std::vector<Tensor> m, v;
  std::size_t step = 0;

  explicit AdamState(const std::vector<Param*>& params);
};

/// lr / (1 + decay * step), applied before every optimizer step.
double effective_lr(double lr, double decay, std::size_t step);

/// One bias-corrected Adam update from each Param::grad.
void adam_step(const std::vector<Param*>& params, AdamState& state, const AdamSettings& settings, double lr);

}  // namespace bla::train
