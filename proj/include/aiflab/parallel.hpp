#pragma once

#include <functional>

namespace aiflab {

// Worker count: AIFLAB_THREADS if set (>= 1), else hardware concurrency.
int thread_count();

// Runs fn(0..n-1); callers write results by index so output order is fixed.
// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace aiflab
