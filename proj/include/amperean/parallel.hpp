#pragma once

#include <cstddef>
#include <functional>

namespace amperean {

// Worker count used by parallel loops. Defaults to $AMPEREAN_THREADS, else the hardware count.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(begin, end) over [0, n) split into contiguous blocks of `grain` indices.
// Block boundaries do not depend on the worker count, so reductions done per block and
// combined in block order are reproducible. Nested calls run serially.
void parallel_blocks(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body);

template <class F>
void parallel_for(std::size_t n, F&& f, std::size_t grain = 1) {
    parallel_blocks(n, grain, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) f(i);
    });
}

}  // namespace amperean
