#pragma once

#include <cstddef>
#include <functional>

namespace parabem {

/// Number of worker threads used by parallel_for (default 1).
void set_threads(int n);
int threads();

/// Runs body(i) for i in [0, n); nested calls run serially. Each index is
/// processed exactly once and results must be written to index-owned slots,
/// so output does not depend on the thread count. The first exception thrown is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace parabem
