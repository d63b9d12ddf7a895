#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace istd {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written by index; callers reduce afterwards in index order, so output does
// not depend on the thread count. If several items throw, the exception of
// the lowest index wins.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        break;
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace istd
