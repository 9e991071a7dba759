#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace modflow {

/// Kernel thread count, read from MODFLOW_THREADS (default 1).
inline std::size_t kernel_threads() {
    static const std::size_t n = [] {
        const char* env = std::getenv("MODFLOW_THREADS");
        if (env == nullptr) return std::size_t{1};
        try {
            long v = std::stol(env);
            return v < 1 ? std::size_t{1} : static_cast<std::size_t>(v);
        } catch (...) {
            return std::size_t{1};
        }
    }();
    return n;
}

/// Calls fn(row) for row in [0, rows). Rows are split into contiguous blocks
/// over at most kernel_threads() workers; fn must only write row-local data.
template <class Fn>
void for_each_row(std::size_t rows, Fn&& fn) {
    const std::size_t workers = std::min(kernel_threads(), rows);
    if (workers <= 1) {
        for (std::size_t r = 0; r < rows; ++r) fn(r);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t block = (rows + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * block;
        const std::size_t hi = std::min(rows, lo + block);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t r = lo; r < hi; ++r) fn(r);
        });
    }
}

/// Sum of per-row partials, reduced in row order so the result does not
/// depend on the thread count.
template <class RowSum>
double row_reduce(std::size_t rows, RowSum&& row_sum) {
    std::vector<double> partial(rows, 0.0);
    for_each_row(rows, [&](std::size_t r) { partial[r] = row_sum(r); });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace modflow
