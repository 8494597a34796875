// parallel.hpp: work-queue parallel loop with deterministic result placement

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace qotto {

// Worker count from QOTTO_WORKERS, falling back to the hardware concurrency.
inline int default_worker_count() {
    if (const char* env = std::getenv("QOTTO_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(i) for i in [0, count) on up to `workers` threads. Indices are pulled from a
// shared counter, so expensive points do not stall a static partition. fn must write its
// result to slot i only. The exception from the lowest failing index is rethrown.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    if (count == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, workers)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (nthreads == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nthreads);
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(body);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace qotto
