#include "hypercauchy/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hypercauchy {

int thread_cap() {
  static const int cap = [] {
    if (const char* env = std::getenv("HYPERCAUCHY_THREADS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end != env && v >= 1) return static_cast<int>(std::min(v, 256L));
      return 1;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(std::min(hw, 256u)) : 1;
  }();
  return cap;
}

void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_cap(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }

  std::mutex err_mu;
  std::exception_ptr first_error;
  auto run_chunk = [&](std::int64_t lo, std::int64_t hi) {
    try {
      for (std::int64_t i = lo; i < hi; ++i) body(i);
    } catch (...) {
      std::lock_guard lock(err_mu);
      if (!first_error) first_error = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    std::int64_t lo = n * w / workers;
    std::int64_t hi = n * (w + 1) / workers;
    pool.emplace_back(run_chunk, lo, hi);
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hypercauchy
