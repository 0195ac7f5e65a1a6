#pragma once
#include <cstdint>

// xoshiro256++ with splitmix64 seeding. Small, fast, and reproducible across
// platforms; replicate k of a run seeded with master seed S uses
// derive_seed(S, k) so any worker partition yields the same stream per
// replicate.

namespace urnlab {

struct splitmix64 {
    uint64_t x;
    explicit splitmix64(uint64_t seed) : x(seed) {}
    uint64_t next() {
        x += 0x9E3779B97F4A7C15ull;
        uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

struct xoshiro256pp {
    uint64_t s[4];

    explicit xoshiro256pp(uint64_t seed) {
        splitmix64 sm(seed);
        for (auto& w : s) w = sm.next();
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t next() {
        uint64_t result = rotl(s[0] + s[3], 23) + s[0];
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    // uniform on [0,1) with 53 random bits
    double uniform01() { return (next() >> 11) * 0x1.0p-53; }
};

inline uint64_t derive_seed(uint64_t master, uint64_t idx) {
    return master + idx * 0x9E3779B97F4A7C15ull;
}

// Poisson(mu) variate: sequential inversion for small mu, PTRD (Hormann's
// transformed rejection) for mu >= 10. Exact distribution, no table state.
int64_t poisson_draw(xoshiro256pp& rng, double mu);

} // namespace urnlab
