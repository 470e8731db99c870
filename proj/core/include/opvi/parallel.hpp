#pragma once

#include <cstddef>
#include <functional>

namespace opvi {

/// Environment variable capping worker threads.
inline constexpr const char* kThreadEnvVar = "OPVI_NUM_THREADS";

/// Worker count: the override if set, else OPVI_NUM_THREADS, else hardware
/// concurrency. Always >= 1.
std::size_t thread_count();

/// Overrides the thread count for this process (0 clears the override).
void set_thread_count(std::size_t n);

/// Runs fn(i) for i in [0, n) over static contiguous chunks. Each index is
/// visited exactly once; results written per index are schedule-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace opvi
