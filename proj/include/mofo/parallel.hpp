#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace mofo {

// Worker cap: MOFO_THREADS env var if set, otherwise hardware concurrency.
inline int max_threads() {
  if (const char* env = std::getenv("MOFO_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs f(i) for i in [0, n). Each i must write only to its own output slot;
// under that contract results are identical to the sequential loop.
template <typename F>
void parallel_for(int n, F&& f) {
  const int threads = std::min(max_threads(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([t, threads, n, &f] {
      for (int i = t; i < n; i += threads) f(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mofo
