#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dn {

/// Worker count: DN_JOBS overrides `requested`; values < 1 mean 1.
inline int resolve_jobs(int requested) {
    if (const char* env = std::getenv("DN_JOBS")) {
        try {
            requested = std::stoi(env);
        } catch (...) {
        }
    }
    return std::max(1, requested);
}

/// Splits [0, count) into `jobs` contiguous chunks and runs fn(chunk, begin, end)
/// on separate threads. Chunk boundaries depend only on (count, jobs).
template <class Fn>
void for_each_chunk(std::size_t count, int jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1, jobs), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        fn(std::size_t{0}, std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t base = count / workers, extra = count % workers;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t end = begin + base + (w < extra ? 1 : 0);
        threads.emplace_back([&, w, begin, end] {
            try {
                fn(w, begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace dn
