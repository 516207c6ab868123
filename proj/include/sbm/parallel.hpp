#pragma once

// Replica-parallel loop. Each replica writes only to its own slot, so results
// are identical for any thread count and scheduling.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace sbm {

/// Worker count: SBM_THREADS if set, otherwise hardware concurrency.
inline unsigned default_thread_count() {
  if (const char* env = std::getenv("SBM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Returns {fn(0), ..., fn(count-1)}. The first exception thrown by any
/// replica (lowest index) is rethrown after all workers stop.
template <typename R, typename Fn>
std::vector<R> parallel_replicas(std::size_t count, Fn&& fn,
                                 unsigned threads = default_thread_count()) {
  std::vector<R> out(count);
  if (count == 0) return out;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mu;
  std::size_t err_index = count;
  std::exception_ptr err;

  auto work = [&] {
    for (;;) {
      if (failed.load(std::memory_order_relaxed)) return;
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      try {
        out[k] = fn(k);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (k < err_index) {
          err_index = k;
          err = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace sbm
