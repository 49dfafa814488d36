#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace oasf::detail {

// Splits [0,count) into contiguous chunks, one per worker.  The first
// exception thrown by any worker is rethrown after the join; work is
// indexed by position, so results never depend on the worker count.
inline void run_parallel_chunks(std::uint64_t count, int threads,
                                const std::function<void(std::uint64_t, std::uint64_t)>& body) {
  if (threads <= 1 || count < 2) {
    body(0, count);
    return;
  }
  const auto workers = static_cast<std::uint64_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t chunk = (count + workers - 1) / workers;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::uint64_t w = 0; w < workers; ++w) {
    const std::uint64_t lo = w * chunk;
    const std::uint64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, &first_error, &error_mutex, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace oasf::detail
