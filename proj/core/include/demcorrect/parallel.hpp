#pragma once

#include <cstddef>
#include <functional>

namespace demcorrect {

/// Worker cap: DEMCORRECT_THREADS if set to a positive integer, otherwise the
/// hardware concurrency. set_thread_limit() overrides both.
std::size_t worker_count();
void set_thread_limit(std::size_t n);  // 0 clears the override

/// Runs body(begin_i, end_i) over contiguous chunks of [0, n). Chunks write
/// disjoint outputs, so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace demcorrect
