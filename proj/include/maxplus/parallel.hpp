#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace maxplus {

/// Runs fn(i) for i in [0, count). Work is claimed dynamically, but callers
/// must write results only into slot i, so the schedule cannot change the
/// output. The first exception thrown by any worker is rethrown here.
inline void parallel_for(long count, int threads, const std::function<void(long)>& fn) {
    if (count <= 0) return;
    const int workers = static_cast<int>(std::min<long>(std::max(threads, 1), count));
    if (workers == 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto body = [&] {
        while (true) {
            const long i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(error_mu);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace maxplus
