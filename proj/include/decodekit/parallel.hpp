#pragma once

#include <cstddef>
#include <functional>

namespace decodekit {

/// Worker count to use when the caller asked for "all": hardware concurrency,
/// at least 1.
unsigned default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
/// executed exactly once; callers write results into pre-sized slots, so the
/// outcome does not depend on scheduling. If any call throws, remaining work
/// is abandoned and the exception from the lowest observed failing index is rethrown.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace decodekit
