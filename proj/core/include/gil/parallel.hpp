#pragma once

#include <cstddef>
#include <functional>

namespace gil {

/// Worker count: explicit request if > 0, else GIL_THREADS, else hardware.
int resolve_threads(int requested = 0);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
/// visited exactly once; callers write results into slot i so the outcome
/// does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace gil
