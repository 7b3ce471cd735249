#pragma once

#include <cstddef>
#include <functional>

namespace ctrw {

/// Worker count from CTRW_FDD_WORKERS if set, else `requested` (>= 1).
int resolve_workers(int requested);

/// Calls body(i) for i in [0, n) on `workers` threads. Indices are split
/// into contiguous blocks, so any per-index output written by `body` is
/// independent of the worker count. Rethrows the first exception (lowest
/// index) after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

} // namespace ctrw
