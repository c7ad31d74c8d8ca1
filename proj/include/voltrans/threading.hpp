#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace voltrans {

/// Set the maximum number of worker threads (0 restores the hardware default).
void set_thread_cap(int n);
int thread_cap();

/// Runs fn(begin, end) over a fixed partition of [0, n). The partition depends
/// only on n and grain, never on the thread count, and every range is written
/// by exactly one worker, so results are bit-identical for any --threads value.
void parallel_ranges(std::int64_t n, std::int64_t grain,
                     const std::function<void(std::int64_t, std::int64_t)>& fn);

/// Deterministic parallel reduction: partials are produced per fixed-size
/// chunk and combined sequentially in chunk order.
double parallel_sum(std::int64_t n, std::int64_t grain,
                    const std::function<double(std::int64_t, std::int64_t)>& chunk_sum);

/// Deterministic scatter reduction. Splits [0, n_items) into a fixed number of
/// chunks (independent of thread count), hands each chunk a private
/// accumulator of type T (default-constructed via make()), and merges the
/// accumulators in chunk order on the calling thread.
template <class T>
void parallel_scatter(std::int64_t n_items, std::int64_t grain,
                      const std::function<T()>& make,
                      const std::function<void(T&, std::int64_t, std::int64_t)>& scatter,
                      const std::function<void(T&&)>& merge_in_order) {
    if (n_items <= 0) return;
    const std::int64_t g = grain > 0 ? grain : 1;
    const std::int64_t n_chunks = (n_items + g - 1) / g;
    std::vector<T> parts;
    parts.reserve(static_cast<std::size_t>(n_chunks));
    for (std::int64_t c = 0; c < n_chunks; ++c) parts.push_back(make());
    parallel_ranges(n_chunks, 1, [&](std::int64_t cb, std::int64_t ce) {
        for (std::int64_t c = cb; c < ce; ++c) {
            const std::int64_t b = c * g;
            const std::int64_t e = std::min(n_items, b + g);
            scatter(parts[static_cast<std::size_t>(c)], b, e);
        }
    });
    for (auto& p : parts) merge_in_order(std::move(p));
}

} // namespace voltrans
