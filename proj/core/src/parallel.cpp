#include "lhdr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lhdr {

namespace {

int threads_from_env() {
  if (const char* env = std::getenv("LHDR_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

std::atomic<int>& thread_setting() {
  static std::atomic<int> n{threads_from_env()};
  return n;
}

}  // namespace

void set_max_threads(int n) { thread_setting().store(std::max(1, n)); }

int max_threads() { return thread_setting().load(); }

void parallel_rows(int rows, const std::function<void(int, int)>& fn) {
  if (rows <= 0) return;
  int workers = std::min(max_threads(), rows);
  // Tiny jobs are not worth a thread spawn.
  if (workers <= 1 || rows < 16) {
    fn(0, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  int chunk = (rows + workers - 1) / workers;
  for (int w = 1; w < workers; ++w) {
    int begin = w * chunk;
    int end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min(rows, chunk));
}

}  // namespace lhdr
