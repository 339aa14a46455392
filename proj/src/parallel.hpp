#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace cimsim::detail {

// Static block partition of [0, n) over `jobs` threads. Work items must be
// independent; the first exception thrown by any worker is rethrown.
template <typename F>
void parallel_for(int n, int jobs, F&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&, j] {
      try {
        for (int i = n * j / jobs; i < n * (j + 1) / jobs; ++i) fn(i);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace cimsim::detail
