#pragma once

#include <cstdint>
#include <cmath>

namespace uqnn {

/// Algorithm identity recorded in output artifacts.
inline constexpr const char* kRngName = "splitmix64-counter";

/// SplitMix64 finalizer (Stafford mix13).
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: draw i of stream (seed, stream) is
/// mix64 applied at counter i, so any draw is addressable directly and
/// sharded generation reproduces single-threaded output bit for bit.
///
/// Stream splitting: substream state = mix64(seed ^ mix64(stream + salt)).
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : state_(mix64(seed ^ mix64(stream + 0x5851F42D4C957F2DULL))) {}

    std::uint64_t bits(std::uint64_t i) const {
        return mix64(state_ + i * 0x9E3779B97F4A7C15ULL);
    }

    /// U[0,1) with 53-bit resolution.
    double uniform(std::uint64_t i) const {
        return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
    }

    /// U[-half_width, half_width).
    double uniform_sym(std::uint64_t i, double half_width) const {
        return (2.0 * uniform(i) - 1.0) * half_width;
    }

    /// Standard normal via Box-Muller; draw i consumes counters 2i, 2i+1.
    double normal(std::uint64_t i) const {
        const double u1 = uniform(2 * i);
        const double u2 = uniform(2 * i + 1);
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::uint64_t state_;
};

} // namespace uqnn
