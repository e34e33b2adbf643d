#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace busdrive {

// Worker count: BUSDRIVE_THREADS if set to a positive integer, otherwise the
// hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("BUSDRIVE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
inline thread_local bool in_worker = false;
}

// Evaluates f(0..n-1) on a bounded pool and returns results in index order.
// Calls made from inside a worker run inline, so nesting never multiplies
// the thread count. The first failing index (lowest) rethrows.
template <typename F>
auto parallel_map(std::size_t n, F&& f) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const auto run_one = [&](std::size_t i) {
    try {
      slots[i].emplace(f(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_count()));
  if (workers <= 1 || detail::in_worker) {
    for (std::size_t i = 0; i < n; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        detail::in_worker = true;
        for (std::size_t i = next++; i < n; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

}  // namespace busdrive
