#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace crowdtt {

// Seeded random source with portable draws. The standard distributions are
// implementation-defined, so uniform and normal variates are derived from
// raw mt19937_64 output here to keep runs bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

    // Independent stream for sub-task `stream` of the same seed.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(mix(seed) ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    }

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection keeps it unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t r;
        do {
            r = engine_();
        } while (r >= limit);
        return r % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; the second variate is discarded so the stream position
    // depends only on the number of calls.
    double normal(double mean, double sigma) {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + sigma * z;
    }

    double truncated_normal(double mean, double sigma, double lo, double hi) {
        for (;;) {
            const double v = normal(mean, sigma);
            if (v >= lo && v <= hi) return v;
        }
    }

private:
    // splitmix64 finaliser.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

}  // namespace crowdtt
