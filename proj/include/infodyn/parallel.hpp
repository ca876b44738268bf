#ifndef INFODYN_PARALLEL_HPP
#define INFODYN_PARALLEL_HPP

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace infodyn {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs task(0..n_tasks-1) across threads. Each task must write only to
/// its own output slot; reductions happen afterwards in task order, so
/// results are independent of the thread count and schedule.
inline void parallel_for(std::size_t n_tasks, unsigned n_threads,
                         const std::function<void(std::size_t)>& task) {
    n_threads = resolve_threads(n_threads);
    if (n_threads <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> counter{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = counter.fetch_add(1);
            if (i >= n_tasks) return;
            task(i);
        }
    };
    std::vector<std::thread> pool;
    unsigned spawn = static_cast<unsigned>(
        std::min<std::size_t>(n_threads, n_tasks));
    pool.reserve(spawn);
    for (unsigned t = 0; t + 1 < spawn; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

} // namespace infodyn

#endif
