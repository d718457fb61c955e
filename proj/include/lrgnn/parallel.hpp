#pragma once

#include <cstddef>
#include <functional>

namespace lrgnn {

/// Worker count: 1 when deterministic, otherwise LRGNN_THREADS if set, else the
/// hardware concurrency.
std::size_t worker_count(bool deterministic = false);

/// Splits [0, n) into at most `workers` contiguous chunks and runs
/// fn(begin, end, worker_index) on each. Chunk boundaries depend only on
/// (n, workers). Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace lrgnn
