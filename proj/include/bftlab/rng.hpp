// Copyright 2026 the bftlab developers. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace bftlab {

// xoshiro256** seeded through splitmix64. Both algorithms are published and
// fixed, so a (scenario, seed) pair reproduces the same draw sequence in any
// implementation of this generator; no standard-library distributions are
// used anywhere, as their outputs differ across library vendors.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    uint64_t next() {
        uint64_t result = rotl(state_[1] * 5, 7) * 9;
        uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, bound) via 128-bit multiply-shift; bound must be > 0.
    uint64_t bounded(uint64_t bound) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next()) * bound) >> 64);
    }

    // Uniform in [lo, hi], inclusive.
    uint64_t range(uint64_t lo, uint64_t hi) { return lo + bounded(hi - lo + 1); }

    // Uniform in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool chance(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return unit() < p;
    }

    double exponential(double mean) {
        double u = unit();
        return -mean * std::log1p(-u);
    }

    // Weighted index draw; weights must sum to a positive value.
    size_t weighted(const double* weights, size_t count) {
        double total = 0.0;
        for (size_t i = 0; i < count; ++i) total += weights[i];
        double x = unit() * total;
        for (size_t i = 0; i < count; ++i) {
            x -= weights[i];
            if (x < 0.0) return i;
        }
        return count - 1;
    }

    // Independent substream, e.g. one per scenario repetition.
    Rng fork(uint64_t stream) {
        uint64_t mix = next() ^ (0x9e3779b97f4a7c15ull * (stream + 1));
        return Rng(mix);
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static uint64_t splitmix64(uint64_t& x) {
        uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::array<uint64_t, 4> state_;
};

}  // namespace bftlab
