#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bla/diffcore/tape.hpp"

namespace bla::train {

/// Per-snapshot loss weights [k^(C-1), ..., k, 1]. k = 0 selects the
/// target-only schedule [0, ..., 0, 1]; any other k outside (0, 1] is a RangeError.
std::vector<double> decay_weights(double k, std::size_t snapshots);

/// Loss weight of every (user, snapshot): masks[i][t] * zeta[t].
Tensor loss_weights(const Tensor& masks, std::span<const double> zeta);

/// Decayed, masked multi-snapshot cross-entropy
///   J = -(1/n) sum_t zeta_t sum_i mask_it [y log p + (1 - y) log(1 - p)]
/// over probs [B x C]. `n` is the user count of the whole batch, which may
/// exceed B when a batch is evaluated in shards.
Var attrition_loss(Var probs, const Tensor& labels, const Tensor& masks, std::span<const double> zeta, double n);

/// Same objective on plain tensors, n = rows of `probs`.
double attrition_loss_value(const Tensor& probs, const Tensor& labels, const Tensor& masks,
                            std::span<const double> zeta);

}  // namespace bla::train
