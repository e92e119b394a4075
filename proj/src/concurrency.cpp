#include "nfpipe/concurrency.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <vector>

namespace nfpipe {

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int workers) { g_workers.store(std::max(1, workers)); }

int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<int>(worker_count(), static_cast<int>(n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> tasks;
  tasks.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    tasks.push_back(std::async(std::launch::async, [&]() {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    }));
  }
  for (auto& t : tasks) t.get();
}

}  // namespace nfpipe
