#pragma once

#include <cstddef>
#include <functional>

namespace tailnet {

/// Number of workers used when a caller passes 0.
unsigned default_threads();

/// Runs task(i) for i in [0, count) on up to `threads` workers.
///
/// Tasks must write only to their own slot; callers reduce the slots in index
/// order afterwards, which keeps results independent of the worker count.
/// The first exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& task);

} // namespace tailnet
