#pragma once

#include <cstddef>
#include <functional>

namespace nfpipe {

/// Process-wide worker count for data-parallel loops (forest tree training,
/// batch evaluation). 1 = serial. Results never depend on the worker count;
/// parallel loops write into preallocated, index-addressed slots.
void set_worker_count(int workers);
int worker_count();

/// Runs fn(i) for i in [0, n), chunked over the configured workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace nfpipe
