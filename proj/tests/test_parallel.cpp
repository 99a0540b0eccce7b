#include <doctest.h>

#include <atomic>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "core/parallel.hpp"

using hhi::core::ThreadPool;
using hhi::core::parallel_for;

TEST_CASE("parallel_for visits every index exactly once") {
  for (std::int64_t n : {0, 1, 7, 100, 1003}) {
    std::vector<std::atomic<int>> hits(static_cast<size_t>(n));
    parallel_for(n, 1, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) hits[static_cast<size_t>(i)]++;
    });
    for (std::int64_t i = 0; i < n; ++i) CHECK(hits[static_cast<size_t>(i)].load() == 1);
  }
}

TEST_CASE("chunk boundaries depend only on n and pool size") {
  auto collect = [](ThreadPool& p, std::int64_t n, std::int64_t min_chunk) {
    std::mutex mu;
    std::vector<std::tuple<int, std::int64_t, std::int64_t>> spans;
    p.run_chunks(n, min_chunk, [&](int c, std::int64_t lo, std::int64_t hi) {
      std::lock_guard<std::mutex> lock(mu);
      spans.emplace_back(c, lo, hi);
    });
    std::sort(spans.begin(), spans.end());
    return spans;
  };

  ThreadPool pool(4);
  auto a = collect(pool, 1001, 1);
  auto b = collect(pool, 1001, 1);
  CHECK(a == b);

  // Chunks tile [0, n) without gaps or overlap.
  std::int64_t cursor = 0;
  for (auto& [c, lo, hi] : a) {
    CHECK(lo == cursor);
    CHECK(hi > lo);
    cursor = hi;
  }
  CHECK(cursor == 1001);
}

TEST_CASE("min_chunk caps the number of chunks") {
  ThreadPool pool(8);
  std::mutex mu;
  int chunks = 0;
  pool.run_chunks(10, 6, [&](int, std::int64_t, std::int64_t) {
    std::lock_guard<std::mutex> lock(mu);
    ++chunks;
  });
  // 10 elements with at least 6 per chunk leaves room for at most 2.
  CHECK(chunks <= 2);
}

TEST_CASE("exceptions from worker chunks surface on the caller") {
  ThreadPool pool(3);
  CHECK_THROWS_AS(pool.run_chunks(100, 1,
                                  [&](int, std::int64_t lo, std::int64_t) {
                                    if (lo >= 0) throw std::runtime_error("boom");
                                  }),
                  std::runtime_error);
}

TEST_CASE("configured_threads is positive") {
  CHECK(hhi::core::configured_threads() >= 1);
}
