#pragma once

#include <cstddef>
#include <span>

#include "bla/diffcore/tape.hpp"

namespace bla {

// Differentiable primitives. Every op throws DimensionError on incompatible
// shapes and records a backward closure on the operands' tape.

/// [m x k] . [k x n] -> [m x n]
Var matmul(Var a, Var b);

/// Elementwise sum of equal shapes.
Var add(Var a, Var b);

/// x [rows x cols] plus bias [cols] broadcast over rows.
Var add_bias(Var x, Var bias);

/// Elementwise (Hadamard) product of equal shapes.
Var hadamard(Var a, Var b);

Var sigmoid(Var x);
Var tanh(Var x);

/// Multiplies every element by a constant.
Var scale(Var x, double factor);

/// Joins tensors of equal rank along `axis`; all other dims must agree.
Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);

/// Strided 1-D convolution (valid padding, no kernel flip):
///   out[b, t, k] = sum_{m, n} w[k, m, n] * x[b, t * stride + m, n]
/// Accepted ranks: x [T x N] or [B x T x N]; w [M x N] (one kernel) or [K x M x N].
/// Output is [T' x K] for rank-2 x and [B x T' x K] for rank-3 x, with
/// T' = (T - M) / stride + 1. M > T is a ConfigError.
Var conv1d(Var x, Var w, std::size_t stride);

/// x [B x T x F] -> x[:, t, :] as [B x F].
Var time_slice(Var x, std::size_t t);

/// x [rows x cols] -> columns [begin, end) as [rows x (end - begin)].
Var slice_cols(Var x, std::size_t begin, std::size_t end);

/// Sum of all elements, as a single-element tensor.
Var sum(Var x);

/// Weighted binary cross-entropy, summed:
///   -sum_j weights[j] * (targets[j] * log p_j + (1 - targets[j]) * log(1 - p_j))
/// with p clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr double kProbClamp = 1e-12;
Var weighted_bce(Var probs, const Tensor& targets, const Tensor& weights);

}  // namespace bla
