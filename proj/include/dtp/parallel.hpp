#pragma once

#include <cstddef>
#include <functional>

namespace dtp {

// Worker cap: DTP_THREADS if set and > 0, otherwise hardware concurrency.
int thread_budget();

// Runs fn(i) for i in [0, n) across up to thread_budget() workers with a
// static index partition. Results must be written to per-index slots; any
// order-sensitive reduction is the caller's job (do it by index afterwards).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dtp
