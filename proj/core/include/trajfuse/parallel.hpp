#pragma once

#include <cstddef>
#include <functional>

namespace trajfuse {

// Worker count resolution: `requested` when > 0, else the TRAJFUSE_THREADS
// environment variable, else hardware concurrency.
int resolve_threads(int requested);

// Runs fn(i) for every i in [0, count). Each index writes only its own
// preallocated slot, so results do not depend on the thread count.
// Exceptions thrown by fn are captured and rethrown on the calling thread.
void parallel_for(size_t count, int threads, const std::function<void(size_t)>& fn);

}  // namespace trajfuse
