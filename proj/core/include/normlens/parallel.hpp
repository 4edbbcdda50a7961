#pragma once

#include <cstddef>
#include <functional>

namespace normlens {

// Worker cap from NORMLENS_THREADS (unset or 0 = hardware concurrency).
std::size_t worker_count();

// Calls fn(i) for every i in [0, count). Work items must write to disjoint,
// index-addressed outputs; the first exception thrown (lowest index) is
// rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  std::size_t workers = worker_count());

}  // namespace normlens
