#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace mixpipe {

// Worker cap from MIXPIPE_THREADS (0 or unset = hardware concurrency).
std::size_t max_worker_threads();

// Runs fn(i) for i in [0, n) over a contiguous chunk per worker. Each index
// must write only to its own output slots; results are then independent of
// the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// splitmix64; used to derive per-module RNG streams from the run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Stream ids, in pipeline order.
enum class RngStream : std::uint64_t {
    Gen = 0,
    Relabel = 1,
    Sampler = 2,
    Train = 3,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
    return std::mt19937_64(mix_seed(seed, static_cast<std::uint64_t>(stream)));
}

} // namespace mixpipe
