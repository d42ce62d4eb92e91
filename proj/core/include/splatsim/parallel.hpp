#pragma once

#include <cstddef>
#include <functional>

namespace splatsim {

// Resolves a requested thread count: explicit > 0 wins, then SPLATSIM_THREADS, then 1.
[[nodiscard]] unsigned resolve_threads(unsigned requested);

// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is handed out in
// contiguous blocks, so callers that write only to slot i stay deterministic.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

} // namespace splatsim
