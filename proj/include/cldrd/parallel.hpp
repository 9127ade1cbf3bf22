#pragma once

#include <cstddef>
#include <functional>

namespace cldrd {

/// Worker count: CLDRD_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Calls fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint,
/// so callers that write only to their own slots stay deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace cldrd
