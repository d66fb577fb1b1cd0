#pragma once

// Deterministic randomness. Every randomized path in the library draws from
// a SplitMix64 stream seeded with a 64-bit value, so identical seeds give
// identical traces on every platform. Draws are converted to exact
// rationals; no floating point is involved.

#include "cdsim/rational.hpp"

#include <cstdint>

namespace cdsim {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n); n must be positive. Plain modulo reduction:
    // the tiny bias is irrelevant here, cross-platform determinism is not.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    // Uniform rational in [0, 1) with denominator 2^53.
    Rational unit() {
        BigInt mantissa(next() >> 11);
        return Rational(std::move(mantissa), BigInt(1) << 53);
    }

    // Standard normal approximated by the Irwin-Hall construction:
    // sum of 12 unit uniforms minus 6 (mean 0, variance exactly 1).
    // Exact-rational by design; adequate for supply noise.
    Rational standard_normal() {
        Rational sum(0);
        for (int i = 0; i < 12; ++i) sum += unit();
        return sum - Rational(6);
    }

private:
    std::uint64_t state_;
};

} // namespace cdsim
