#pragma once

#include <cstddef>
#include <functional>

namespace oscar {

/// Calls fn(i) for every i in [0, n) on up to `workers` threads. Results must
/// be written to per-index slots so the outcome does not depend on
/// scheduling. The first exception thrown is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace oscar
