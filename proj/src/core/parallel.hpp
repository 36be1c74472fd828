#pragma once

#include <cstddef>
#include <functional>

namespace urf {

// 0 means "use all available cores".
void set_thread_count(unsigned n) noexcept;
unsigned thread_count() noexcept;

// Runs body(i) for i in [0, n). Every index is independent and writes only
// its own outputs, so results never depend on scheduling. Nested calls from
// inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace urf
