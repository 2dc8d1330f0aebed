#pragma once

#include <cstddef>
#include <functional>

namespace sci {

/// Worker count used by the numeric kernels. Defaults to 1.
void set_thread_count(int threads);
int thread_count() noexcept;

/// Runs body(begin, end) over a static partition of [0, n). Each index is
/// visited by exactly one worker, so per-index results do not depend on the
/// thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace sci
