#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace polykin {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used only to derive well-separated seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Deterministic substream keyed by (seed, keys...). Two different key
/// tuples give statistically independent generators.
inline Rng substream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(seed);
    for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(splitmix64(h)),
                      static_cast<std::uint32_t>(splitmix64(h) >> 32)};
    return Rng(seq);
}

/// Stream tags, so unrelated consumers never share a substream.
enum class StreamTag : std::uint64_t {
    mc_shard = 1,
    init = 2,
    collide = 3,
    majorant = 4,
    field = 5,
    probe = 6,
    check = 7,
};

inline Rng substream(std::uint64_t seed, StreamTag tag, std::uint64_t a = 0, std::uint64_t b = 0) {
    return substream(seed, {static_cast<std::uint64_t>(tag), a, b});
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

}  // namespace polykin
