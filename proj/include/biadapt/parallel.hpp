#pragma once

#include <cstddef>
#include <functional>

namespace biadapt {

/// Worker count: BIADAPT_THREADS if set and positive, otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs body(begin, end) over contiguous, disjoint chunks of [0, n).
/// Chunk boundaries depend only on n and the worker count; bodies must
/// write to disjoint outputs so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

} // namespace biadapt
