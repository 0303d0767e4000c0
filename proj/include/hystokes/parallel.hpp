#ifndef HYSTOKES_PARALLEL_HPP
#define HYSTOKES_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hystokes {

/// Worker count: explicit argument if positive, else HYSTOKES_THREADS, else
/// min(hardware_concurrency, 8).
int resolve_threads(int requested = 0);

/// Runs body(i) for i in [0, n) on a static partition across threads.
/// Results must be written to disjoint slots; ordering of observable output
/// is up to the caller (workers get contiguous index ranges).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int threads = 0);

}  // namespace hystokes

#endif
