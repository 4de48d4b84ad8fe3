#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace cortexgeo::par {

// Global worker-count setting. 0 means "use hardware concurrency".
// Results of every parallel routine below are independent of this value.
void set_threads(int n);
int thread_count();

namespace detail {

constexpr std::int64_t kBlock = 2048;

void run_blocks(std::int64_t n_blocks,
                const std::function<void(std::int64_t)>& body);

}  // namespace detail

// Invokes f(begin, end) on consecutive half-open ranges covering [0, n).
// Block boundaries are fixed (independent of the thread count), so any
// per-block output written to disjoint slots is deterministic.
template <class F>
void parallel_for(std::int64_t n, F&& f) {
  if (n <= 0) return;
  const std::int64_t n_blocks = (n + detail::kBlock - 1) / detail::kBlock;
  detail::run_blocks(n_blocks, [&](std::int64_t b) {
    const std::int64_t begin = b * detail::kBlock;
    const std::int64_t end = std::min(n, begin + detail::kBlock);
    f(begin, end);
  });
}

// Deterministic map-reduce: map_block(begin, end) produces one partial per
// fixed-size block; partials are combined by a pairwise tree in block order,
// so the result is bit-identical for every thread count.
template <class T, class MapF, class CombineF>
T map_reduce(std::int64_t n, T identity, MapF&& map_block, CombineF&& combine) {
  if (n <= 0) return identity;
  const std::int64_t n_blocks = (n + detail::kBlock - 1) / detail::kBlock;
  std::vector<T> partial(static_cast<std::size_t>(n_blocks), identity);
  detail::run_blocks(n_blocks, [&](std::int64_t b) {
    const std::int64_t begin = b * detail::kBlock;
    const std::int64_t end = std::min(n, begin + detail::kBlock);
    partial[static_cast<std::size_t>(b)] = map_block(begin, end);
  });
  // pairwise tree reduction over blocks
  std::size_t m = partial.size();
  while (m > 1) {
    const std::size_t half = m / 2;
    for (std::size_t i = 0; i < half; ++i)
      partial[i] = combine(partial[2 * i], partial[2 * i + 1]);
    if (m % 2 == 1) partial[half] = partial[m - 1];
    m = half + (m % 2);
  }
  return partial[0];
}

}  // namespace cortexgeo::par
