#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace lutcore {

// Worker cap from LUTCORE_THREADS (0 = auto). Unset defaults to auto.
inline int worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LUTCORE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
    return static_cast<int>(hw);
  }
  return static_cast<int>(hw);
}

// Splits [0, n) into contiguous chunks, one per worker. fn(begin, end) must
// produce results independent of the split.
inline void parallel_for(int n, const std::function<void(int, int)>& fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    if (n > 0) fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lutcore
