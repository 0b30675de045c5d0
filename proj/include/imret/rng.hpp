#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace imret {

/// splitmix64 step; used to derive well-separated seeds for sub-streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for sub-stream `stream` of the run seed. Distinct streams drive
/// independent sampling steps (seed pool, per-fold negatives) so results
/// stay reproducible regardless of execution order.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x517cc1b727220a95ULL * (stream + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// mt19937_64 with a bias-free bounded draw. The engine's output sequence
/// is fixed by the standard, and the rejection loop below avoids the
/// implementation-defined std::uniform_int_distribution, so sampling is
/// byte-reproducible across platforms.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform draw in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % bound;
    }

private:
    std::mt19937_64 engine_;
};

/// `count` distinct indices from [0, population), by partial Fisher-Yates.
/// Order of the returned indices is part of the deterministic contract.
inline std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                           std::size_t count,
                                                           SampleRng& rng) {
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) pool[i] = i;
    if (count > population) count = population;
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.below(population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

} // namespace imret
