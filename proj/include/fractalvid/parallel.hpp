#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fvid {

inline int hardware_workers() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

/// Runs job(i) for i in [0, n) on a shared work queue. `keep_going` is polled
/// before each job; the first exception stops the queue and is rethrown.
inline void parallel_for(int n, int workers, const std::function<void(int)>& job,
                         const std::function<bool()>& keep_going = {}) {
  workers = std::clamp(workers < 1 ? hardware_workers() : workers, 1, std::max(1, n));
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto run = [&] {
    for (;;) {
      if (failed.load() || (keep_going && !keep_going())) return;
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run);
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace fvid
