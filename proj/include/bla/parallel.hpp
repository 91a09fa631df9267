#pragma once

#include <algorithm>
#include <cstddef>

namespace bla {

/// How per-user work is scheduled. Both policies use the same fixed shard
/// partition and reduce shard results in shard order, so they produce
/// bit-identical results; the serial path is the reference.
enum class ExecPolicy { kSerial, kParallel };

inline constexpr std::size_t kDefaultShardSize = 32;

inline std::size_t shard_count(std::size_t items, std::size_t shard_size) {
  return (items + shard_size - 1) / shard_size;
}

/// Calls fn(shard, begin, end) for consecutive ranges of at most `shard_size`
/// items. With kParallel, shards run on OpenMP threads in any order.
template <typename Fn>
void for_each_shard(std::size_t items, std::size_t shard_size, ExecPolicy policy, Fn&& fn) {
  const std::size_t shards = shard_count(items, shard_size);
  if (policy == ExecPolicy::kParallel && shards > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(shards); ++s) {
      const auto shard = static_cast<std::size_t>(s);
      fn(shard, shard * shard_size, std::min(items, (shard + 1) * shard_size));
    }
    return;
  }
  for (std::size_t s = 0; s < shards; ++s) fn(s, s * shard_size, std::min(items, (s + 1) * shard_size));
}

}  // namespace bla
