#pragma once

#include <cstddef>
#include <functional>

namespace cpl {

// Runs f(i) for every i in [0, n) on up to `threads` workers (<= 0: hardware
// concurrency). Each call must only write state owned by slot i. If any call
// throws, the exception of the smallest failing i is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace cpl
