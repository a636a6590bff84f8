#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace holopulse {

/// Runs `fn(row_begin, row_end)` over disjoint row blocks of [0, rows).
/// Each row is written by exactly one worker, so results do not depend on
/// the thread count. threads == 0 picks hardware concurrency.
template <class Fn>
void parallel_rows(std::size_t rows, std::size_t threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, std::max<std::size_t>(rows, 1));
    if (threads <= 1) {
        fn(std::size_t{0}, rows);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        const std::size_t chunk = (rows + threads - 1) / threads;
        for (std::size_t i = 0; i < threads; ++i) {
            const std::size_t lo = i * chunk;
            const std::size_t hi = std::min(rows, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, i, lo, hi] {
                try {
                    fn(lo, hi);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace holopulse
