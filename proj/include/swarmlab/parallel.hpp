#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace swarmlab {

// Static index split over short-lived threads. Each index is handled by
// exactly one worker, so per-index work that owns its state stays
// deterministic regardless of the worker count.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    int used = std::min(workers, n);
    std::vector<std::thread> threads;
    threads.reserve(used);
    for (int w = 0; w < used; ++w) {
        threads.emplace_back([&, w] {
            for (int i = w; i < n; i += used) fn(i);
        });
    }
    for (auto& t : threads) t.join();
}

inline int default_workers() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace swarmlab
