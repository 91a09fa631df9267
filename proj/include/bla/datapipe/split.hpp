#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bla/datapipe/frame.hpp"

namespace bla::data {

struct SplitRatios {
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

struct SplitIndices {
  std::vector<std::size_t> train, valid, test;  // ascending
};

/// Stratified on the binary `strata`: each class is shuffled with `seed` and
/// cut at round(n_c * train) and round(n_c * valid). Ratios must sum to 1.
/// Throws ContractError if either class is empty.
SplitIndices stratified_split(std::span<const double> strata, const SplitRatios& ratios, std::uint64_t seed);

struct FrameSplit {
  SnapshotFrame train, valid, test;
};

/// Splits on the target-period labels.
FrameSplit split_frame(const SnapshotFrame& frame, const SplitRatios& ratios, std::uint64_t seed);

}  // namespace bla::data
