#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace emrl::detail {

inline int worker_count(int requested, long n)
{
    int w = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return static_cast<int>(std::max(1L, std::min<long>(w, n)));
}

// Runs fn(i) for i in [0, n) over contiguous chunks. The first exception is rethrown.
template <class Fn>
void parallel_for(long n, int requested, Fn&& fn)
{
    int workers = worker_count(requested, n);
    if (workers == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    long chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (long i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace emrl::detail
