#pragma once

#include <cstddef>
#include <functional>

namespace mvlaf {

/// Environment variable read by DefaultThreadCount().
inline constexpr const char* kThreadCountEnv = "MVLAF_NUM_THREADS";

/// MVLAF_NUM_THREADS if set to a positive integer, else hardware concurrency.
std::size_t DefaultThreadCount();

/// Calls body(i) for i in [0, count) on up to `threads` workers. Work is
/// claimed dynamically; the first exception thrown by any body is rethrown.
void ParallelFor(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace mvlaf
