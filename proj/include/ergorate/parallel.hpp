#ifndef ERGORATE_PARALLEL_HPP
#define ERGORATE_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace ergorate {

// Worker count: hardware concurrency, capped by ERGORATE_THREADS when set.
inline std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ERGORATE_THREADS")) {
    try {
      long cap = std::stol(env);
      if (cap >= 1) hw = std::min<std::size_t>(hw, static_cast<std::size_t>(cap));
    } catch (...) {
    }
  }
  return hw;
}

/// Splits [0, count) into contiguous chunks and runs body(begin, end) on each,
/// one chunk per worker. Chunk boundaries depend only on count and the worker
/// count, so callers writing into per-index slots get schedule-independent
/// results.
template <typename Body>
void parallel_for(std::size_t count, Body&& body, std::size_t max_workers = 0) {
  std::size_t workers = max_workers ? max_workers : worker_count();
  workers = std::min(workers, count);
  if (workers <= 1) {
    if (count) body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ergorate

#endif  // ERGORATE_PARALLEL_HPP
