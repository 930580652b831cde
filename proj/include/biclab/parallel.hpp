#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "biclab/rng.hpp"

namespace biclab {

/// Replications are grouped into fixed-size chunks. Chunk boundaries do not
/// depend on the worker count, and chunk results are merged in chunk order,
/// so the reduced value is bit-identical for any `jobs`.
inline constexpr std::size_t kReplicationChunk = 256;

inline unsigned resolve_jobs(unsigned jobs) {
  if (jobs > 0) return jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Calls body(index, chunk_index) for chunk indices in [0, n_chunks) on up to
/// `jobs` threads. The first exception thrown by a worker is rethrown.
template <class Body>
void parallel_for(std::size_t n_chunks, unsigned jobs, Body&& body) {
  jobs = std::min<unsigned>(resolve_jobs(jobs), static_cast<unsigned>(std::max<std::size_t>(n_chunks, 1)));
  if (jobs <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= n_chunks) return;
        try {
          body(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n_chunks);
          return;
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Runs body(replication, stream, accumulator) for every replication in
/// [0, n). `Acc` must be copyable and provide merge(const Acc&).
template <class Acc, class Body>
Acc replicate(std::uint64_t seed, std::size_t n, unsigned jobs, const Acc& zero, Body&& body) {
  const std::size_t n_chunks = (n + kReplicationChunk - 1) / kReplicationChunk;
  std::vector<Acc> partial(n_chunks, zero);
  parallel_for(n_chunks, jobs, [&](std::size_t c) {
    const std::size_t begin = c * kReplicationChunk;
    const std::size_t end = std::min(n, begin + kReplicationChunk);
    Acc& acc = partial[c];
    for (std::size_t r = begin; r < end; ++r) {
      Stream stream = derive_stream(seed, r);
      body(r, stream, acc);
    }
  });
  Acc total = zero;
  for (const auto& p : partial) total.merge(p);
  return total;
}

}  // namespace biclab
