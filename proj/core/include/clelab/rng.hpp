#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace clelab {

// Deterministic RNG wrapper.  All samplers take an explicit seed; child
// streams are derived with a splitmix64 hash so that replicas indexed by
// (seed, stream) are independent and reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static Rng child(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed, stream));
    }

    double uniform() {
        // 53-bit uniform in (0,1); portable across libstdc++ versions
        // unlike std::uniform_real_distribution.
        return ((eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller; avoids distribution-object state so consumption per call
    // is fixed, which keeps interleaved streams reproducible.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    long poisson(double mean) {
        std::poisson_distribution<long> d(mean);
        return d(eng_);
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

} // namespace clelab
