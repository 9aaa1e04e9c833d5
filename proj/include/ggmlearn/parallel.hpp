#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ggmlearn {

inline unsigned default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

// Static block partition of [0, count); results must be written by index so
// the outcome is independent of scheduling. The first captured exception is
// rethrown on the caller thread.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& fn) {
    if (count == 0) return;
    if (threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    unsigned nt = std::min<std::size_t>(threads, count);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    std::size_t chunk = (count + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            std::size_t lo = static_cast<std::size_t>(t) * chunk;
            std::size_t hi = std::min(count, lo + chunk);
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace ggmlearn
