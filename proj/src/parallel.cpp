#include "cortexgeo/parallel.hpp"

#include <algorithm>
#include <cstdlib>

namespace cortexgeo::par {

namespace {

std::atomic<int> g_threads{0};

int resolve_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}

}  // namespace

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }

int thread_count() { return resolve_threads(); }

namespace detail {

void run_blocks(std::int64_t n_blocks,
                const std::function<void(std::int64_t)>& body) {
  const int workers =
      static_cast<int>(std::min<std::int64_t>(resolve_threads(), n_blocks));
  if (workers <= 1 || n_blocks == 1) {
    for (std::int64_t b = 0; b < n_blocks; ++b) body(b);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= n_blocks) break;
      body(b);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int i = 1; i < workers; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace detail

}  // namespace cortexgeo::par
