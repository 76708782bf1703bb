// Apache License, Version 2.0, refer to LICENSE.txt
#include "ppctrl/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "ppctrl/numerics.hpp"

namespace ppctrl {

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_indexed(
    std::int64_t n, int jobs,
    const std::function<void(int worker, std::int64_t i)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(resolve_jobs(jobs), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(0, i);
    return;
  }

  // Dynamic chunked scheduling; chunk boundaries never influence results
  // because each index writes its own slot.
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::int64_t chunk = std::max<std::int64_t>(1, n / (workers * 8));

  auto worker = [&](int id) {
    for (;;) {
      const std::int64_t begin = next.fetch_add(chunk);
      if (begin >= n || failed.load(std::memory_order_relaxed)) return;
      const std::int64_t end = std::min(begin + chunk, n);
      for (std::int64_t i = begin; i < end; ++i) {
        try {
          fn(id, i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers - 1);
  for (int t = 0; t < workers - 1; ++t) threads.emplace_back(worker, t + 1);
  worker(0);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

void parallel_for(std::int64_t n, int jobs,
                  const std::function<void(std::int64_t)>& fn) {
  parallel_for_indexed(n, jobs, [&fn](int, std::int64_t i) { fn(i); });
}

double kahan_total(std::span<const double> values) {
  KahanSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace ppctrl
