#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

// Deterministic, platform-independent noise streams. Every measurement
// repeat draws from its own stream keyed by (seed, point index, repeat
// index), so results are independent of evaluation order and of how grid
// points are scheduled across workers.

namespace sapa {

/// splitmix64 step: advances the state and returns the next 64-bit output.
inline std::uint64_t splitmix64_next(std::uint64_t& state)
{
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t point_index,
                std::uint64_t repeat_index)
    {
        // Fold the key into the state one element at a time, scrambling in
        // between so nearby keys land on unrelated streams.
        state_ = seed;
        state_ = splitmix64_next(state_) ^ point_index;
        state_ = splitmix64_next(state_) ^ repeat_index;
        (void)splitmix64_next(state_);
    }

    /// Uniform double in the open interval (0, 1).
    double uniform()
    {
        const std::uint64_t bits = splitmix64_next(state_);
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the spare variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.14159265358979323846 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Complex value with independent standard-normal quadratures.
    std::complex<double> complex_normal()
    {
        const double re = normal();
        const double im = normal();
        return {re, im};
    }

private:
    std::uint64_t state_ = 0;
    bool has_spare_ = false;
    double spare_ = 0;
};

}  // namespace sapa
