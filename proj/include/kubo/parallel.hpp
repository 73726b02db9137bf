#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace kubo {

/// Worker count: KUBO_THREADS if set to a positive integer, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("KUBO_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Runs fn(chunk_index, begin, end) over [0, n) cut into chunks of fixed size.
/// The chunk layout depends only on n and chunk_size, so callers that keep one
/// partial result per chunk and combine them in chunk order get bitwise
/// identical output for any number of workers.
template <class Fn>
void for_each_chunk(std::size_t n, std::size_t chunk_size, Fn&& fn) {
  if (n == 0) return;
  chunk_size = std::max<std::size_t>(chunk_size, 1);
  const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), n_chunks));
  auto run_chunk = [&](std::size_t c) {
    const std::size_t b = c * chunk_size;
    fn(c, b, std::min(n, b + chunk_size));
  };
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      try {
        run_chunk(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n_chunks);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size;
}

}  // namespace kubo
