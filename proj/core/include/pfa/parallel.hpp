#pragma once

#include <cstddef>
#include <functional>

namespace pfa {

/// Worker count: PFA_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned default_thread_count();

/// Calls fn(i) for every i in [0, count) on up to `threads` workers. Indices
/// are claimed dynamically; callers write results into slot i so output
/// order never depends on scheduling. The first exception thrown by any call
/// is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace pfa
