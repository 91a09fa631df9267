#include "bla/datapipe/split.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bla/error.hpp"

namespace bla::data {

SplitIndices stratified_split(std::span<const double> strata, const SplitRatios& ratios, std::uint64_t seed) {
  const double total = ratios.train + ratios.valid + ratios.test;
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw RangeError("split ratios must be non-negative and sum to 1");
  }
  SplitIndices out;
  std::mt19937_64 rng(seed);
  for (double cls : {0.0, 1.0}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < strata.size(); ++i) {
      if (strata[i] == cls) members.push_back(i);
    }
    if (members.empty()) {
      throw ContractError("stratification needs both classes; class " + std::to_string(int(cls)) + " is empty");
    }
    // Fisher-Yates on the raw engine output keeps the permutation independent
    // of the standard library's distribution implementations.
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng() % i]);
    const auto n = static_cast<double>(members.size());
    const std::size_t n_train = std::min<std::size_t>(std::lround(n * ratios.train), members.size());
    const std::size_t n_valid = std::min<std::size_t>(std::lround(n * ratios.valid), members.size() - n_train);
    out.train.insert(out.train.end(), members.begin(), members.begin() + n_train);
    out.valid.insert(out.valid.end(), members.begin() + n_train, members.begin() + n_train + n_valid);
    out.test.insert(out.test.end(), members.begin() + n_train + n_valid, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

FrameSplit split_frame(const SnapshotFrame& frame, const SplitRatios& ratios, std::uint64_t seed) {
  const std::vector<double> target = frame.target_labels();
  const SplitIndices idx = stratified_split(target, ratios, seed);
  return {subset(frame, idx.train), subset(frame, idx.valid), subset(frame, idx.test)};
}

}  // namespace bla::data
