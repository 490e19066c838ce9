#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tsct {

/// Run fn(i) for i in [0, n) on up to `workers` threads (0 = hardware concurrency).
/// Each index is processed exactly once; callers write results into per-index
/// slots so the outcome never depends on the schedule. The first exception thrown
/// by any task is rethrown after all workers have joined.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers == 0) { workers = std::max(1u, std::thread::hardware_concurrency()); }
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) { fn(i); }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) { error = std::current_exception(); }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) { pool.emplace_back(work); }
  work();
  for (auto& t : pool) { t.join(); }
  if (error) { std::rethrow_exception(error); }
}

} // namespace tsct
