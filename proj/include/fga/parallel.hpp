#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace fga {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> n{0};
    return n;
}
}  // namespace detail

// 0 selects all hardware threads.
inline void set_num_threads(int n) { detail::thread_setting() = std::max(0, n); }

inline int num_threads() {
    int n = detail::thread_setting();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs f(i) for i in [0, n) over contiguous static blocks. Each index is
// handled by exactly one worker, so any per-index output is independent of
// the worker count.
template <class F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr err;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// Sum of f(i) over [0, n) in fixed-size chunks added in chunk order; the
// result does not depend on the worker count.
template <class T, class F>
T deterministic_sum(std::size_t n, F&& f, std::size_t chunk = 4096) {
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<T> partial(nchunks, T{});
    parallel_for(nchunks, [&](std::size_t c) {
        T acc{};
        const std::size_t hi = std::min(n, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < hi; ++i) acc += f(i);
        partial[c] = acc;
    });
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

}  // namespace fga
