#pragma once

#include <functional>

namespace perisurf {

/// Worker count from PERISURF_THREADS, else the hardware concurrency.
int thread_count();

/// Runs fn(0..n−1) on up to thread_count() threads. Each index must write
/// only its own output slot; the first exception thrown is rethrown.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace perisurf
