#pragma once

#include <cstdint>
#include <random>

namespace ufs {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed-splitting rule shared by every sampler: the draw with index `index`
/// in stream `stream` uses its own generator seeded with
///     splitmix64(splitmix64(base ^ splitmix64(stream)) + index).
/// Each unit of work owns its generator, so results do not depend on how
/// indices are spread across workers.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
    return splitmix64(splitmix64(base ^ splitmix64(stream)) + index);
}

inline Rng make_rng(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
    return Rng(derive_seed(base, stream, index));
}

}  // namespace ufs
