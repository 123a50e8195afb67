#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vbsde::detail {

/// Runs body(i) for i in order[0..], pulling indices from a shared counter.
/// Every task writes only its own outputs, so results do not depend on the
/// number of workers or on scheduling. The first exception is rethrown.
template <typename Body>
void parallel_for(const std::vector<int>& order, int workers, Body&& body) {
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(order.size())));
  if (w == 1) {
    for (int i : order) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= order.size()) return;
      try {
        body(order[k]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(order.size());
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w) - 1);
  for (int t = 1; t < w; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace vbsde::detail
