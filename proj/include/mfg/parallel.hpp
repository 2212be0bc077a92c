#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace mfg {

// Runs body(i) for i in [0, n) over `threads` workers in contiguous chunks.
// Callers write results into per-index slots and reduce in index order, so
// the outcome does not depend on the thread count.
template <typename Body>
void parallel_for(int n, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(threads);
  const int chunk = (n + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const int begin = w * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    workers.emplace_back([begin, end, &body]() {
      for (int i = begin; i < end; ++i) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

}  // namespace mfg
