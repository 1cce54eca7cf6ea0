#pragma once

#include <cstddef>
#include <functional>

namespace diffwalker {

/// Number of worker threads used by parallel_for. Defaults to the hardware
/// concurrency; values below 1 are clamped to 1.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, count). Iterations are split into contiguous
/// chunks, one per thread. Each iteration must write only to its own slot so
/// the result is independent of the thread count.
void parallel_for(std::ptrdiff_t count,
                  const std::function<void(std::ptrdiff_t)>& body);

}  // namespace diffwalker
