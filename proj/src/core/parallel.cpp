#include "core/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>

namespace hhi::core {

int configured_threads() {
  if (const char* env = std::getenv("HHI_NUM_THREADS")) {
    int v = std::atoi(env);
    if (v >= 1) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ThreadPool::ThreadPool(int threads) {
  for (int i = 1; i < threads; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop() {
  for (;;) {
    Task task;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_.wait(lk, [this] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) {
        if (stop_) return;
        continue;
      }
      task = std::move(queue_.back());
      queue_.pop_back();
    }
    task.fn();
  }
}

void ThreadPool::run_chunks(std::int64_t n, std::int64_t min_chunk,
                            const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  min_chunk = std::max<std::int64_t>(min_chunk, 1);
  int max_chunks = static_cast<int>(std::min<std::int64_t>(size(), (n + min_chunk - 1) / min_chunk));
  if (max_chunks <= 1 || workers_.empty()) {
    fn(0, 0, n);
    return;
  }

  // Even split; chunk boundaries are a pure function of (n, max_chunks).
  std::atomic<int> remaining(max_chunks - 1);
  std::exception_ptr errs[2] = {nullptr, nullptr};
  std::mutex err_mu;
  std::condition_variable done_cv;
  std::mutex done_mu;

  auto run_one = [&](int c) {
    std::int64_t lo = n * c / max_chunks;
    std::int64_t hi = n * (c + 1) / max_chunks;
    try {
      fn(c, lo, hi);
    } catch (...) {
      std::lock_guard<std::mutex> lk(err_mu);
      if (!errs[1]) errs[1] = std::current_exception();
    }
  };

  {
    std::lock_guard<std::mutex> lk(mu_);
    for (int c = 1; c < max_chunks; ++c) {
      queue_.push_back(Task{[&, c] {
        run_one(c);
        if (remaining.fetch_sub(1) == 1) {
          std::lock_guard<std::mutex> dlk(done_mu);
          done_cv.notify_all();
        }
      }});
    }
  }
  cv_.notify_all();

  try {
    fn(0, 0, n / max_chunks);
  } catch (...) {
    errs[0] = std::current_exception();
  }

  // Help drain the queue while waiting so a single-thread pool cannot stall.
  for (;;) {
    Task task;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (!queue_.empty()) {
        task = std::move(queue_.back());
        queue_.pop_back();
      }
    }
    if (task.fn) {
      task.fn();
      continue;
    }
    break;
  }
  {
    std::unique_lock<std::mutex> lk(done_mu);
    done_cv.wait(lk, [&] { return remaining.load() == 0; });
  }

  if (errs[0]) std::rethrow_exception(errs[0]);
  if (errs[1]) std::rethrow_exception(errs[1]);
}

ThreadPool& pool() {
  static ThreadPool p(configured_threads());
  return p;
}

void parallel_for(std::int64_t n, std::int64_t min_chunk,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  pool().run_chunks(n, min_chunk, [&fn](int, std::int64_t lo, std::int64_t hi) { fn(lo, hi); });
}

}  // namespace hhi::core
