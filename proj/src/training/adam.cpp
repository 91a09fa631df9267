#include "bla/training/adam.hpp"

#include <cmath>

#include "bla/error.hpp"

namespace bla::train {

AdamState::AdamState(const std::vector<Param*>& params) {
  for (const Param* p : params) {
    m.emplace_back(p->value.shape());
    v.emplace_back(p->value.shape());
  }
}

double effective_lr(double lr, double decay, std::size_t step) {
  return lr / (1.0 + decay * static_cast<double>(step));
}

void adam_step(const std::vector<Param*>& params, AdamState& state, const AdamSettings& s, double lr) {
  if (params.size() != state.m.size()) throw DimensionError("optimizer state does not match the parameter list");
  ++state.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params[p]->value;
    const Tensor& grad = params[p]->grad;
    if (grad.shape() != value.shape() || state.m[p].shape() != value.shape()) {
      throw DimensionError("gradient shape " + shape_string(grad.shape()) + " vs parameter " +
                           shape_string(value.shape()));
    }
    Tensor& m = state.m[p];
    Tensor& v = state.v[p];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.epsilon);
    }
  }
}

}  // namespace bla::train
