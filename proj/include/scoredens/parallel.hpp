#pragma once

#include <cstddef>
#include <functional>

namespace scoredens {

/// Caps worker threads for parallel_for; 0 restores the default (hardware
/// concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Calls body(i) for every i in [0, n). Each index must write only to its
/// own output slot; callers reduce afterwards in index order so results do
/// not depend on the thread count. Exceptions from workers are rethrown
/// (lowest failing index wins). Calls made from inside a worker run
/// serially on that worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace scoredens
