#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hhi::core {

// Fixed-size pool sized from HHI_NUM_THREADS (default: hardware threads).
// parallel_for splits [0, n) into one contiguous chunk per worker, so the
// partition depends only on n and the pool size, never on timing. Callers
// must only write disjoint outputs from different chunks; reductions happen
// per chunk and are combined in index order by the caller.
class ThreadPool {
 public:
  explicit ThreadPool(int threads);
  ~ThreadPool();

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(chunk_index, lo, hi) for a deterministic chunking of [0, n).
  // Chunk 0 runs on the calling thread. Exceptions from any chunk are
  // rethrown on the caller (first chunk index wins).
  void run_chunks(std::int64_t n, std::int64_t min_chunk,
                  const std::function<void(int, std::int64_t, std::int64_t)>& fn);

 private:
  struct Task {
    std::function<void()> fn;
  };
  void worker_loop();

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Task> queue_;
  bool stop_ = false;
};

// Process-wide pool; created on first use.
ThreadPool& pool();

// Convenience wrapper over pool().run_chunks that hides the chunk index.
void parallel_for(std::int64_t n, std::int64_t min_chunk,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

int configured_threads();

}  // namespace hhi::core
