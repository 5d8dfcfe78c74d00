#pragma once

#include <cstddef>
#include <functional>

namespace hg::bench {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Exceptions
/// from the body are rethrown on the calling thread (the first one wins).
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace hg::bench
