#pragma once

#include <cstddef>
#include <functional>

namespace scr {

/// Set the worker-thread ceiling used by parallel_chunks (0 = hardware
/// concurrency). Affects wall time only, never results.
void set_max_threads(int n);
int max_threads();

std::size_t num_chunks(std::size_t n, std::size_t chunk_size);

/// Run fn(chunk_index, begin, end) over [0, n) split into fixed chunks of
/// chunk_size (the last chunk may be short). Chunk boundaries depend only on
/// n and chunk_size, so per-chunk outputs -- and any reduction done in chunk
/// order afterwards -- are identical for every thread count.
void parallel_chunks(
    std::size_t n, std::size_t chunk_size,
    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace scr
