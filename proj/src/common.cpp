#include "adgnn/common.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <thread>
#include <vector>

namespace adgnn {

int thread_count() {
  static const int cached = [] {
    if (const char* env = std::getenv("ADGNN_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return cached;
}

void parallel_for(Index n, const std::function<void(Index, Index)>& body) {
  const int threads = thread_count();
  if (n <= 0) return;
  if (threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const Index chunks = std::min<Index>(threads, n);
  const Index per = (n + chunks - 1) / chunks;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(chunks));
  for (Index c = 0; c < chunks; ++c) {
    const Index lo = c * per;
    const Index hi = std::min(n, lo + per);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace adgnn
