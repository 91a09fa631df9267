#include "bla/training/init.hpp"

#include <cmath>

#include "bla/error.hpp"

namespace bla::train {

std::pair<std::size_t, std::size_t> glorot_fans(const Shape& shape) {
  if (shape.size() == 2) return {shape[0], shape[1]};
  if (shape.size() == 3) return {shape[1] * shape[2], shape[1] * shape[0]};
  throw DimensionError("no Glorot fan convention for shape " + shape_string(shape));
}

double glorot_limit(const Shape& shape) {
  const auto [in, out] = glorot_fans(shape);
  return std::sqrt(6.0 / static_cast<double>(in + out));
}

Tensor glorot_init(const Shape& shape, std::mt19937_64& rng) {
  const double limit = glorot_limit(shape);
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t(shape);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor glorot_init(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return glorot_init(shape, rng);
}

void glorot_initialize(model::BlaParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params.for_each([&](const std::string&, Param& p) {
    p.value = p.value.rank() == 1 ? Tensor(p.value.shape()) : glorot_init(p.value.shape(), rng);
    p.zero_grad();
  });
}

}  // namespace bla::train
