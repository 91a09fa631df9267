#pragma once

#include <cstdint>
#include <random>

#include "bla/diffcore/tensor.hpp"
#include "bla/model/params.hpp"

namespace bla::train {

/// (fan_in, fan_out) of a weight tensor. [in x out] for dense and gate
/// matrices; [K x M x A] conv kernels count fan_in = M*A, fan_out = M*K.
std::pair<std::size_t, std::size_t> glorot_fans(const Shape& shape);

/// sqrt(6 / (fan_in + fan_out)).
double glorot_limit(const Shape& shape);

/// Uniform on [-L, L] with L = glorot_limit(shape).
Tensor glorot_init(const Shape& shape, std::mt19937_64& rng);
Tensor glorot_init(const Shape& shape, std::uint64_t seed);

/// Glorot weights, zero biases, drawn in BlaParams::for_each order from one stream.
void glorot_initialize(model::BlaParams& params, std::uint64_t seed);

}  // namespace bla::train
