// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cstdint>
#include <functional>

namespace ppctrl {

// 0 or negative means "use hardware concurrency".
int resolve_jobs(int jobs);

// Runs fn(i) for i in [0, n) across up to `jobs` threads. Work items must
// write only to their own output slot; the partition is not observable in
// the results, so any jobs value yields identical output.
void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t)>& fn);

// As parallel_for, but hands each call a stable worker id in
// [0, resolve_jobs(jobs)), for per-worker scratch buffers.
void parallel_for_indexed(
    std::int64_t n, int jobs,
    const std::function<void(int worker, std::int64_t i)>& fn);

}  // namespace ppctrl
