#pragma once

#include <cstddef>
#include <functional>

namespace tsfb {

// Worker count: TSFB_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t worker_count();

// Calls body(i) for every i in [0, count) on up to worker_count() threads;
// a call made from inside a worker runs inline.
// Results must be written to per-index slots by the caller. The first
// exception thrown by any body is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace tsfb
