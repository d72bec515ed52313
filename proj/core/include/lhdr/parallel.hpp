#pragma once

#include <functional>

namespace lhdr {

/// Upper bound on worker threads used inside image kernels. 0 or 1 means
/// sequential. Defaults to the LHDR_THREADS environment variable, else 1.
void set_max_threads(int n);
int max_threads();

/// Runs fn(row_begin, row_end) over [0, rows) split into contiguous chunks.
/// Work items must write disjoint outputs; results are then identical to a
/// sequential run.
void parallel_rows(int rows, const std::function<void(int, int)>& fn);

}  // namespace lhdr
