#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace qhedge::detail {

/// Runs fn(chunk_index, begin, end) over fixed-size chunks of [0, n) and
/// returns the per-chunk results in chunk order. Chunk boundaries do not
/// depend on the worker count, so any reduction over the returned vector is
/// reproducible across parallelism levels.
template <typename Partial, typename Fn>
std::vector<Partial> parallel_chunks(std::size_t n, std::size_t chunk_size, Fn fn,
                                     unsigned n_threads = 0) {
    if (chunk_size == 0) chunk_size = 1;
    std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<Partial> results(n_chunks);
    if (n_chunks == 0) return results;

    if (n_threads == 0) n_threads = std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_chunks));

    if (n_threads == 1) {
        for (std::size_t c = 0; c < n_chunks; ++c)
            results[c] = fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        return results;
    }

    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned w = 0; w < n_threads; ++w) {
        workers.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += n_threads)
                results[c] = fn(c, c * chunk_size, std::min(n, (c + 1) * chunk_size));
        });
    }
    for (auto& t : workers) t.join();
    return results;
}

}  // namespace qhedge::detail
