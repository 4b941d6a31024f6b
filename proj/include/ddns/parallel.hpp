#pragma once

#include <cstddef>
#include <functional>

namespace ddns {

/// Worker count from DDNS_WORKERS (default 1, clamped to [1, 256]).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n) over worker_count() threads with static chunking.
/// fn must write only to slot i of preallocated output; the first exception
/// (lowest index) is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace ddns
