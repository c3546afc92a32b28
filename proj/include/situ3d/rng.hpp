#pragma once

#include <cstdint>

namespace situ3d {

// Deterministic xoshiro256++ generator. The standard <random> engines are
// portable but the distributions are not, and dataset bytes must reproduce
// exactly for a given seed, so the distribution math lives here too.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expansion of the seed into the full state
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [lo, hi], inclusive. Rejection keeps it unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = span == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % span + 1) % span);
        std::uint64_t x = next();
        while (span != 0 && x > limit) x = next();
        return lo + static_cast<std::int64_t>(span == 0 ? x : x % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream, stable under reordering of sibling draws.
    Rng fork(std::uint64_t stream) const {
        return Rng(state_[0] ^ (0x6c62272e07bb0142ULL * (stream + 1)));
    }

private:
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }
    std::uint64_t state_[4];
};

} // namespace situ3d
