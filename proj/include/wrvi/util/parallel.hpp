#pragma once

#include <cstdlib>
#include <thread>
#include <vector>

namespace wrvi {

// Worker cap for evaluation draws, from WRVI_THREADS (default 1, which
// keeps everything on one thread for bit determinism).
inline int eval_thread_cap() {
  const char* env = std::getenv("WRVI_THREADS");
  if (env == nullptr) return 1;
  const int v = std::atoi(env);
  return v < 1 ? 1 : v;
}

// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
// iteration order is unspecified across threads but every index runs
// exactly once.
template <class F>
void parallel_for(int n, int threads, F&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace wrvi
