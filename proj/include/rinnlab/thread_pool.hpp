#pragma once

// parallel_for over an index range. Jobs write only to their own output
// slots and draw randomness from per-job substreams, so the result is
// identical no matter how many workers run or how they are scheduled.

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rinnlab {

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

template <typename Fn>
void parallel_for(int n_jobs, int n_threads, Fn&& fn) {
    if (n_jobs <= 0) return;
    if (n_threads <= 1 || n_jobs == 1) {
        for (int i = 0; i < n_jobs; ++i) fn(i);
        return;
    }
    if (n_threads > n_jobs) n_threads = n_jobs;

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= n_jobs) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace rinnlab
