#pragma once

#include <cstdint>
#include <functional>

namespace hypercauchy {

// Worker-thread ceiling: HYPERCAUCHY_THREADS if set (clamped to [1, 256]),
// otherwise the hardware concurrency. Read once per process.
int thread_cap();

// Runs body(i) for i in [0, n). Chunked across at most thread_cap() threads;
// scheduling is unordered, so callers must write results into per-index slots
// and reduce sequentially afterwards to stay deterministic.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}  // namespace hypercauchy
