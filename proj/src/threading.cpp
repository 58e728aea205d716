#include "implan/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace implan {

int configured_thread_count() {
  const char* env = std::getenv("IMPLAN_THREADS");
  if (env == nullptr) {
    return 1;
  }
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

std::int64_t num_chunks(std::int64_t count) {
  return (count + kReductionChunk - 1) / kReductionChunk;
}

void parallel_chunks(std::int64_t count,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& body) {
  const std::int64_t chunks = num_chunks(count);
  const int workers = configured_thread_count();
  if (workers <= 1 || chunks <= 1) {
    for (std::int64_t c = 0; c < chunks; ++c) {
      const std::int64_t begin = c * kReductionChunk;
      const std::int64_t end = std::min(begin + kReductionChunk, count);
      body(begin, end, c);
    }
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const std::int64_t c = next.fetch_add(1);
        if (c >= chunks) {
          return;
        }
        const std::int64_t begin = c * kReductionChunk;
        const std::int64_t end = std::min(begin + kReductionChunk, count);
        body(begin, end, c);
      }
    });
  }
  for (std::thread& t : pool) {
    t.join();
  }
}

void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t)>& body) {
  parallel_chunks(count, [&](std::int64_t begin, std::int64_t end,
                             std::int64_t /*chunk*/) {
    for (std::int64_t i = begin; i < end; ++i) {
      body(i);
    }
  });
}

}  // namespace implan
