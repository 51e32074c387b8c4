#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace nvtherm {

// Ordered parallel map: evaluates fn(0..n-1) on a worker pool and returns
// the results indexed by task, so reductions see the same order at any
// worker count. Tasks must be independent; the first exception wins and is
// rethrown on the calling thread.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int workers,
                            const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  if (n == 0) return out;
  if (workers < 1) workers = 1;
  const std::size_t pool =
      std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (pool == 1) {
    for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
    return out;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n || failed.load()) return;
      try {
        out[k] = fn(k);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(pool);
  for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (failed.load()) std::rethrow_exception(error);
  return out;
}

}  // namespace nvtherm
