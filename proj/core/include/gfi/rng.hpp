#pragma once

#include <cstdint>

namespace gfi {

// Deterministic random generator used throughout the library.
// xoshiro256++ state, seeded through splitmix64 so that nearby integer
// seeds (e.g. base seed + chain index) give decorrelated streams.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ULL) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform draw on the half-open interval (0, 1]; never returns 0, so
    // log(uniform()) is always finite.
    double uniform();

    // Uniform draw on (lo, hi].
    double uniform(double lo, double hi);

    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_int(std::uint64_t n);

    // Standard normal via the trigonometric Box-Muller transform.
    // Consumes exactly two uniforms per call and keeps no cached spare,
    // so the stream position is reproducible.
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Gamma(shape, rate) with mean shape/rate, via Marsaglia-Tsang
    // squeeze; shapes below one are boosted through the power identity.
    double gamma(double shape, double rate);

private:
    std::uint64_t s_[4];
};

// Beta(a, b) draw as a ratio of two gamma variates; requires a > 0, b > 0.
double sample_beta(double a, double b, Rng& rng);

} // namespace gfi
