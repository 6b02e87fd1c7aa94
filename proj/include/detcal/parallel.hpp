#pragma once

#include <cstddef>
#include <functional>

namespace detcal {

/// Resolves a requested thread count: 0 means "all hardware threads".
unsigned resolve_threads(unsigned requested) noexcept;

/// Runs `body(begin, end, worker)` over contiguous chunks of [0, n) on up to
/// `threads` workers. Worker w always receives the w-th chunk, so any
/// per-worker reduction merged in worker order is deterministic. With one
/// worker the body runs inline on the calling thread. The first exception
/// thrown by a worker is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t, unsigned)> &body);

/// Number of chunks parallel_for will use for (n, threads).
unsigned chunk_count(std::size_t n, unsigned threads) noexcept;

} // namespace detcal
