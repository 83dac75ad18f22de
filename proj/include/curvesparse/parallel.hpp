#pragma once

#include <cstddef>
#include <functional>

namespace curvesparse {

/// Worker count used by parallel_for; 0 means hardware concurrency.
void set_worker_count(unsigned workers);
unsigned worker_count();

/// Runs fn(i) for i in [0, n) over contiguous chunks. Each index must write
/// only its own output slot; results are then independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace curvesparse
