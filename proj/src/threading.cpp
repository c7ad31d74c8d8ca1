#include "voltrans/threading.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace voltrans {

namespace {
std::atomic<int> g_thread_cap{0};

int effective_threads() {
    const int cap = g_thread_cap.load(std::memory_order_relaxed);
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int base = hw > 0 ? hw : 1;
    return cap > 0 ? std::min(cap, base) : base;
}
} // namespace

void set_thread_cap(int n) { g_thread_cap.store(n, std::memory_order_relaxed); }

int thread_cap() { return effective_threads(); }

void parallel_ranges(std::int64_t n, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    const std::int64_t g = grain > 0 ? grain : 1;
    const std::int64_t n_chunks = (n + g - 1) / g;
    const int workers = static_cast<int>(std::min<std::int64_t>(effective_threads(), n_chunks));
    if (workers <= 1) {
        for (std::int64_t c = 0; c < n_chunks; ++c)
            fn(c * g, std::min(n, (c + 1) * g));
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::int64_t c = next.fetch_add(1, std::memory_order_relaxed);
            if (c >= n_chunks) return;
            fn(c * g, std::min(n, (c + 1) * g));
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) threads.emplace_back(work);
    work();
    for (auto& t : threads) t.join();
}

double parallel_sum(std::int64_t n, std::int64_t grain,
                    const std::function<double(std::int64_t, std::int64_t)>& chunk_sum) {
    if (n <= 0) return 0.0;
    const std::int64_t g = grain > 0 ? grain : 1;
    const std::int64_t n_chunks = (n + g - 1) / g;
    std::vector<double> parts(static_cast<std::size_t>(n_chunks), 0.0);
    parallel_ranges(n_chunks, 1, [&](std::int64_t cb, std::int64_t ce) {
        for (std::int64_t c = cb; c < ce; ++c)
            parts[static_cast<std::size_t>(c)] = chunk_sum(c * g, std::min(n, (c + 1) * g));
    });
    double total = 0.0;
    for (double p : parts) total += p; // fixed order
    return total;
}

} // namespace voltrans
