#pragma once

#include <functional>

namespace mdlab {

/// Runs task(i) for i in [0, count). Work is split over up to `threads`
/// workers; each index is processed exactly once. Tasks must write only to
/// their own slot of a preallocated result array, so the final reduction
/// (done by the caller in index order) is independent of the thread count.
void parallelFor(long count, int threads, const std::function<void(long)>& task);

}  // namespace mdlab
