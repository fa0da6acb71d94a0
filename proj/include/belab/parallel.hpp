#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace belab {

// Worker count: BE_LAB_THREADS when set (clamped to 1..256), otherwise the
// hardware concurrency. Results never depend on it:
// callers only parallelize over independent tasks whose outputs are stored by
// index and reduced in a fixed order.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BE_LAB_THREADS")) {
    try {
      const long cap = std::stol(env);
      n = static_cast<unsigned>(std::clamp(cap, 1L, 256L));
    } catch (const std::exception&) {
      // ignore malformed values
    }
  }
  return n;
}

// Runs task(i) for i in [0, count). The first exception thrown (by lowest
// index) is rethrown after all workers finish.
template <typename Task>
void parallel_for(std::size_t count, Task&& task) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace belab
