#ifndef TWISTKAC_PARALLEL_HPP
#define TWISTKAC_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace twistkac {

/// Worker count: hardware concurrency capped by TWISTKAC_THREADS.
inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("TWISTKAC_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
  }
  return n;
}

inline constexpr std::size_t default_chunk = 4096;

/// Runs fn(chunk_index, begin, end) over [0, n_items) split into fixed-size
/// chunks. Chunk boundaries depend only on chunk_size, and each chunk writes
/// its own partial result slot, so reductions over the returned vector are
/// identical for any worker count.
template <class Partial, class ChunkFn>
std::vector<Partial> map_chunks(std::size_t n_items, ChunkFn fn,
                                std::size_t chunk_size = default_chunk) {
  const std::size_t n_chunks = n_items == 0 ? 0 : (n_items + chunk_size - 1) / chunk_size;
  std::vector<Partial> partials(n_chunks);
  const unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n_chunks, 1));
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c)
      partials[c] = fn(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
    return partials;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (;;) {
      std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) break;
      partials[c] = fn(c, c * chunk_size, std::min(n_items, (c + 1) * chunk_size));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  return partials;
}

}  // namespace twistkac

#endif
