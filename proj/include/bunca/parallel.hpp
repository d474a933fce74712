#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include "bunca/types.hpp"

namespace bunca {

// Worker count, capped by the BUNCA_THREADS environment variable.
std::size_t thread_count();

// Runs body(begin, end) over disjoint chunks of [0, n). Every index is
// visited by exactly one worker, so per-row writes stay deterministic.
template <typename Body>
void parallel_for(Index n, Body&& body, Index min_chunk = 256) {
  const auto workers = static_cast<Index>(thread_count());
  if (workers <= 1 || n < 2 * min_chunk) {
    body(Index{0}, n);
    return;
  }
  const Index chunks = std::min(workers, n / min_chunk);
  const Index step = (n + chunks - 1) / chunks;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  for (Index begin = 0; begin < n; begin += step) {
    const Index end = std::min(n, begin + step);
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

}  // namespace bunca
