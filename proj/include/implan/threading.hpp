#pragma once

#include <cstdint>
#include <functional>

namespace implan {

/// Worker count taken from the IMPLAN_THREADS environment variable
/// (default 1). Results never depend on it: parallel loops write to
/// per-index slots or reduce fixed-size chunks in index order.
int configured_thread_count();

/// Runs body(i) for i in [0, count). Iterations must be independent.
void parallel_for(std::int64_t count,
                  const std::function<void(std::int64_t)>& body);

/// Chunk size used by deterministic reductions; fixed so that partial sums
/// are identical for any worker count.
inline constexpr std::int64_t kReductionChunk = 4096;

/// Computes per-chunk partial results with body(chunk_begin, chunk_end,
/// chunk_index) and guarantees chunk boundaries independent of threading.
void parallel_chunks(std::int64_t count,
                     const std::function<void(std::int64_t, std::int64_t,
                                              std::int64_t)>& body);

/// Number of fixed-size chunks covering count items.
std::int64_t num_chunks(std::int64_t count);

}  // namespace implan
