#ifndef ARW_PARALLEL_HPP
#define ARW_PARALLEL_HPP

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace arw {

// Runs work(t) for t in [0, trials). Each call must write only slot t of
// any shared output, which keeps results invariant in the thread count.
template <typename F>
void for_each_trial(std::uint64_t trials, int threads, F&& work) {
    if (threads <= 1 || trials <= 1) {
        for (std::uint64_t t = 0; t < trials; ++t) work(t);
        return;
    }
    const std::uint64_t workers =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(threads), trials);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t t = w; t < trials; t += workers) work(t);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace arw

#endif
