#pragma once

// Static-partition parallel loop. Each index is processed by exactly one
// worker and writes only its own outputs, so results do not depend on the
// worker count.

#include <cstddef>
#include <functional>

namespace xipinn {

/// Upper bound on workers; 0 means hardware concurrency.
void set_thread_cap(unsigned n);
unsigned thread_cap();

void parallel_for(std::size_t n, const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace xipinn
