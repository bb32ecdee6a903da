#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ftm {

/// Deterministic random stream: mt19937_64 engine with hand-rolled
/// distribution transforms, so identical seeds give identical draws on every
/// platform (std:: distributions are implementation-defined).
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix(seed, stream)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Rejection sampling, exactly uniform.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    /// Standard normal via Box-Muller (no cached spare, one value per call).
    double gaussian() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Exponential with the given rate.
    double exponential(double rate) {
        double u = uniform01();
        while (u <= 0.0) u = uniform01();
        return -std::log(u) / rate;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 finalizer over (seed, stream)
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace ftm
