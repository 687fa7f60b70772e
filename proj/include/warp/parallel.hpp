#pragma once

#include <cstddef>
#include <functional>

namespace warp {

// Worker count from WARP_THREADS, else the hardware concurrency (>= 1).
std::size_t thread_count();

// Calls fn(i) for i in [0, n) across thread_count() workers. Work items are
// claimed dynamically; callers that reduce results must write into
// per-index slots. The first exception thrown by any item is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace warp
