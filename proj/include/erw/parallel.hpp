#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace erw {

/// 0 means "one worker per hardware thread".
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Calls fn(i) for every i in [0, count). Indices are split into contiguous
/// blocks, one per worker. Callers write results into slots owned by index i
/// and reduce afterwards in index order, so output never depends on the
/// worker count. The first exception (in worker order) is rethrown.
template <class Fn>
void parallel_for(std::int64_t count, unsigned workers, Fn&& fn) {
  if (count <= 0) return;
  const auto n_workers =
      static_cast<std::int64_t>(std::min<std::int64_t>(resolve_workers(workers), count));
  if (n_workers == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_workers));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n_workers));
  for (std::int64_t w = 0; w < n_workers; ++w) {
    const std::int64_t begin = count * w / n_workers;
    const std::int64_t end = count * (w + 1) / n_workers;
    threads.emplace_back([&fn, &errors, w, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace erw
