#pragma once

#include <functional>

namespace tube_rmpc {

// Worker count: TUBE_RMPC_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
int worker_count();

// Splits [0, count) into contiguous chunks and runs body(begin, end, worker)
// on up to `workers` threads. Exceptions thrown by a worker are rethrown on
// the calling thread after all workers finish.
void parallel_for(int count, int workers,
                  const std::function<void(int begin, int end, int worker)>& body);

}  // namespace tube_rmpc
