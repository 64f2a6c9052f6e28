#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sabandit::detail {

// Calls body(i) for i in [0, count) on up to `jobs` threads. The first
// exception stops the remaining work and is rethrown on the caller.
template <class Body>
void parallel_for(long count, int jobs, Body&& body) {
  std::atomic<long> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const long workers = std::min<long>(std::max(jobs, 1), count);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (long i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sabandit::detail
