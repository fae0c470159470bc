#include "amperean/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace amperean {

namespace {

unsigned default_threads() {
    if (const char* env = std::getenv("AMPEREAN_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<unsigned> g_threads{0};
thread_local bool t_inside = false;

}  // namespace

void set_thread_count(unsigned n) { g_threads = std::max(1u, n); }

unsigned thread_count() {
    unsigned n = g_threads.load();
    if (n == 0) {
        n = default_threads();
        g_threads = n;
    }
    return n;
}

void parallel_blocks(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body) {
    if (n == 0) return;
    grain = std::max<std::size_t>(1, grain);
    std::size_t blocks = (n + grain - 1) / grain;
    unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), blocks));
    if (workers <= 1 || t_inside) {
        for (std::size_t b = 0; b < blocks; ++b) body(b * grain, std::min(n, (b + 1) * grain));
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        t_inside = true;
        for (;;) {
            std::size_t b = next.fetch_add(1);
            if (b >= blocks) break;
            try {
                body(b * grain, std::min(n, (b + 1) * grain));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
        t_inside = false;
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace amperean
