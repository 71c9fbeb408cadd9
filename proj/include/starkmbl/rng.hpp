#pragma once

#include <cmath>
#include <cstdint>

namespace starkmbl {

// Counter-based generator (splitmix64). Output depends only on the seed, not
// on the platform or the standard library, so every stream is reproducible
// bit for bit. Distribution helpers are hand-rolled for the same reason:
// std::uniform_real_distribution is implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [-half_width, half_width).
    double next_symmetric(double half_width) { return (2.0 * next_double() - 1.0) * half_width; }

    // Standard normal via Box-Muller (deterministic, two uniforms per call).
    double next_normal() {
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t state_;
};

// One splitmix64 scrambling round; used to fold identifiers into seeds.
inline std::uint64_t mix_u64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace starkmbl
