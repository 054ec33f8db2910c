#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fluor {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("FLUOR_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Fixed-chunk parallel loop. The item range [0, n) is split into a chunk
// count that depends only on n, never on the worker count; workers pull
// whole chunks. Reductions that (a) accumulate within a chunk in index
// order and (b) merge chunk results in chunk order are therefore bitwise
// reproducible for any number of workers.
struct ChunkPlan {
    size_t n_items = 0, n_chunks = 0, chunk_size = 0;

    static ChunkPlan make(size_t n_items, size_t max_chunks = 64) {
        ChunkPlan p;
        p.n_items = n_items;
        p.n_chunks = std::min(max_chunks, n_items > 0 ? n_items : 1);
        p.chunk_size = (n_items + p.n_chunks - 1) / p.n_chunks;
        return p;
    }
    size_t begin(size_t chunk) const { return chunk * chunk_size; }
    size_t end(size_t chunk) const { return std::min(n_items, (chunk + 1) * chunk_size); }
};

// fn(chunk_index, begin, end); exceptions propagate to the caller.
inline void parallel_chunks(const ChunkPlan& plan, int workers,
                            const std::function<void(size_t, size_t, size_t)>& fn) {
    workers = resolve_workers(workers);
    if (workers <= 1 || plan.n_chunks <= 1) {
        for (size_t c = 0; c < plan.n_chunks; ++c)
            if (plan.begin(c) < plan.end(c)) fn(c, plan.begin(c), plan.end(c));
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex err_mtx;
    auto worker = [&] {
        for (;;) {
            const size_t c = next.fetch_add(1);
            if (c >= plan.n_chunks || failed.load(std::memory_order_relaxed)) return;
            if (plan.begin(c) >= plan.end(c)) continue;
            try {
                fn(c, plan.begin(c), plan.end(c));
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lk(err_mtx);
                    if (!error) error = std::current_exception();
                }
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nt = std::min<size_t>(workers, plan.n_chunks);
    pool.reserve(nt);
    for (int i = 0; i < nt; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace fluor
