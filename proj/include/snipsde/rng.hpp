#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace snipsde {

/// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive a child key from a parent key and a list of integer coordinates.
/// Distinct coordinate tuples give statistically independent keys.
template <typename... Ts>
constexpr std::uint64_t derive_key(std::uint64_t parent, Ts... coords) noexcept {
    std::uint64_t k = mix64(parent ^ 0x5851F42D4C957F2DULL);
    ((k = mix64(k ^ mix64(static_cast<std::uint64_t>(coords) + 0x2545F4914F6CDD1DULL))), ...);
    return k;
}

/// Domain tags keep the streams used by different subsystems disjoint.
enum class StreamTag : std::uint64_t {
    path_draws = 1,
    synth_subject = 2,
    study_repetition = 3,
    test = 99,
};

/// Counter-based generator: the i-th output depends only on (key, i).
/// Cheap to construct, so every replicate or subject gets its own.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) noexcept {
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
        std::uint64_t r = next_u64();
        while (r >= limit) r = next_u64();
        return r % n;
    }

    /// Standard normal via Box-Muller. Uses two outputs, returns one variate.
    double normal() noexcept {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// The normal variate addressed by (seed, stream, replicate, step).
inline double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t replicate,
                             std::uint64_t step) noexcept {
    CounterRng rng(derive_key(seed, static_cast<std::uint64_t>(StreamTag::path_draws), stream, replicate, step));
    return rng.normal();
}

} // namespace snipsde
