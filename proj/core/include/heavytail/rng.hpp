#pragma once

#include <cstdint>
#include <vector>

namespace heavytail {

// Derives per-trial seeds from (master seed, trial index). The hash is part of
// the reproducibility contract: records written by trial index are identical
// no matter how trials are scheduled across workers.
inline uint64_t splitmix64_step(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t stable_hash(uint64_t master, uint64_t index) {
    uint64_t s = master ^ 0x5851f42d4c957f2dULL;
    uint64_t a = splitmix64_step(s);
    s ^= index * 0xd6e8feb86659fd93ULL;
    uint64_t b = splitmix64_step(s);
    return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

// xoshiro256++ with splitmix64 state expansion. All sampling in the project
// goes through this generator so outputs do not depend on the C++ standard
// library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& si : s_) si = splitmix64_step(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0,1) with 53 random bits
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * next_double(); }

    // uniform integer in [0, bound) by rejection (no modulo bias)
    uint64_t next_below(uint64_t bound) {
        const uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool next_bool() { return (next_u64() >> 63) != 0; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

} // namespace heavytail
