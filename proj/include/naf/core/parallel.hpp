#pragma once

#include <cstddef>
#include <exception>
#include <algorithm>
#include <mutex>
#include <thread>
#include <vector>

namespace naf {

/// Resolves a worker count: explicit > 0, else $NAF_WORKERS, else the
/// number of hardware threads.
int resolve_workers(int requested);

/// Keeps freed blocks in the heap instead of returning them to the OS.
/// Training allocates and frees megabyte-sized buffers every step; with the
/// default glibc thresholds each one is a fresh mmap and page faults dominate.
/// No-op on other allocators. Call once at program start.
void tune_allocator();

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so results written per index do not depend on `workers`.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> threads;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  threads.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t begin = n * w / count;
    const std::size_t end = n * (w + 1) / count;
    threads.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace naf
