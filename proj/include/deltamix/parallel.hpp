#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace deltamix {

inline std::size_t resolve_threads(int requested, std::size_t tasks) {
  std::size_t n = requested > 0 ? static_cast<std::size_t>(requested)
                                 : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, tasks));
}

// Runs fn(i) for i in [0, n). Work is claimed dynamically, but callers write
// results into slot i so the outcome never depends on scheduling. The first
// exception (lowest index) is rethrown after all workers finish.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = resolve_threads(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace deltamix
