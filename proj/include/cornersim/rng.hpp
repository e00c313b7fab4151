#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace cornersim {

/// Deterministic 64-bit stream (splitmix64). The standard <random> engines
/// are portable but the distributions are not, so uniform and normal draws
/// are spelled out here with a fixed operation order.
class RandomStream {
public:
    RandomStream() = default;
    explicit RandomStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        return n == 0 ? 0 : next_u64() % n;
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per draw.
    double next_normal() {
        double u1 = next_uniform();
        const double u2 = next_uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_ = 0;
};

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const char c : s) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Named sub-stream of a run seed. Streams for distinct labels are
/// independent, so adding a consumer never perturbs existing ones.
inline RandomStream stream_for(std::uint64_t seed, std::string_view label) {
    return RandomStream(seed ^ fnv1a64(label));
}

}  // namespace cornersim
