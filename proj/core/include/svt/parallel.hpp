#pragma once

#include <cstddef>
#include <functional>

namespace svt {

// Worker count: min(hardware threads, SVF_THREADS if set). At least 1.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks over the
// worker threads; fn must write only to index-i slots so the result is
// independent of the schedule. Runs inline when n is small or one worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace svt
