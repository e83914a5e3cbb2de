#pragma once

// Seeded, splittable random streams.
//
// The (seed, stream_index) -> sequence mapping is fixed by this file alone: the
// engine is xoshiro256** seeded through SplitMix64, and uniforms are formed from
// the top 53 bits. Nothing depends on <random> distributions, whose output is
// implementation-defined.

#include <array>
#include <cstdint>
#include <limits>

namespace urn {

// Stafford variant 13 finalizer, as used by SplitMix64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

// xoshiro256** 1.0 (Blackman & Vigna). Models std::uniform_random_bit_generator.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit constexpr RngStream(std::uint64_t key) noexcept {
        SplitMix64 sm(key);
        for (auto& w : s_) {
            w = sm.next();
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 bits of resolution.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Fair bit from the top of the word.
    constexpr bool coin() noexcept { return ((*this)() >> 63) != 0; }

    friend constexpr bool operator==(const RngStream&, const RngStream&) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

// Stream `stream_index` of the family identified by `seed`. Days of an ensemble
// use stream_index = day index, so they can run on any worker in any order.
constexpr RngStream make_rng_stream(std::uint64_t seed, std::uint64_t stream_index) noexcept {
    return RngStream(mix64(mix64(seed) + 0x632BE59BD9B4E019ULL * (stream_index + 1)));
}

} // namespace urn
