#pragma once

#include <cmath>
#include <cstdint>

namespace idcnn {

// SplitMix64 finalizer. State advances by a fixed odd constant and the
// output is a bijective hash of the state, so jumping to an arbitrary
// position or deriving an independent substream is O(1). That makes every
// randomized stage of the pipeline reproducible bit-exactly and lets
// parallel workers draw from disjoint streams without coordination.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; never returns 0 so log() is always finite.
    double next_double_open() { return ((next_u64() >> 11) + 1) * 0x1.0p-53; }

    float next_float() { return (next_u64() >> 40) * 0x1.0p-24f; }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // Lemire-style rejection to remove modulo bias.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        std::uint64_t lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Standard normal via Box-Muller (two uniforms per draw).
    double next_gaussian() {
        double u = next_double_open();
        double v = next_double();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
    }

    // Independent substream keyed on (seed, key). Derivation uses only the
    // base seed, never the current position, so split(k) is stable no matter
    // how many values were drawn from this generator.
    Rng split(std::uint64_t key) const { return Rng(mix64(seed_ ^ mix64(key + 0x5851F42D4C957F2Dull))); }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// One draw from Gamma(shape=alpha, scale=1), alpha >= 1, by the
// Marsaglia-Tsang squeeze method.
inline double sample_gamma_unit(Rng& rng, double alpha) {
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = rng.next_gaussian();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_double_open();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace idcnn
