/**
 * @file rng.hpp
 * @brief Seeded random streams and seed derivation.
 *
 * Every random draw in the simulator comes from an Rng constructed from a
 * derived seed. Seeds are derived from (master seed, label, index) so that
 * a trial's stream never depends on scheduling or on how many other trials
 * ran before it.
 *
 * The distribution helpers are written out by hand instead of using
 * std::uniform_real_distribution and friends, whose output is
 * implementation-defined. This keeps runs byte-reproducible across standard
 * libraries.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mdiotbc {

/// One step of the splitmix64 output function (a strong 64-bit mixer).
inline uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a label; stable across platforms.
inline uint64_t label_hash(std::string_view label) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/**
 * @brief Derive a child seed from a parent seed, a sub-stream label and an index.
 *
 * Distinct (label, index) pairs give unrelated streams with overwhelming
 * probability.
 */
inline uint64_t derive_seed(uint64_t parent, std::string_view label, uint64_t index = 0) {
    uint64_t s = mix64(parent ^ label_hash(label));
    return mix64(s + 0x9E3779B97F4A7C15ULL * (index + 1));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), eng_(seed) {}

    uint64_t seed() const { return seed_; }

    /// Independent child stream named by `label` and `index`.
    Rng fork(std::string_view label, uint64_t index = 0) const {
        return Rng(derive_seed(seed_, label, index));
    }

    uint64_t next() { return eng_(); }

    unsigned bit() { return static_cast<unsigned>(eng_() >> 63); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    /// Uniform integer in [0, bound), unbiased by rejection.
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
        uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % bound;
    }

    /// Poisson draw by sequential inversion. Adequate for the small means
    /// (well below 50) that photon sources use.
    unsigned poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        unsigned k = 0;
        while (u >= cdf && k < 10000) {
            ++k;
            p *= mean / k;
            cdf += p;
            if (p == 0.0) break;
        }
        return k;
    }

private:
    uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace mdiotbc
