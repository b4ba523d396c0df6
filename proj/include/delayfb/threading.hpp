#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace delayfb {

/// Bounded worker pool over an index range. Work items must be independent;
/// results keyed by index stay deterministic regardless of schedule.
/// The first exception thrown by a worker is rethrown on the caller.
template <typename F>
void parallel_for(std::size_t n, F&& fn, unsigned n_threads = 0) {
  if (n == 0) return;
  if (n_threads == 0) n_threads = std::thread::hardware_concurrency();
  if (n_threads <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const auto workers = std::min<std::size_t>(n_threads, n);
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace delayfb
