#pragma once

#include <cstdint>

namespace mtr {

/// SplitMix64 pseudo-random generator (Steele, Lea, Flood 2014).
///
/// This is the single random source of the whole workbench. It is fixed to
/// SplitMix64 so that every corruption, initialization, and shuffle is
/// bit-reproducible across platforms and across independent implementations
/// of the same file formats:
///   - next()      advances state by the 64-bit golden gamma and applies the
///                 MurmurHash3-style finalizer.
///   - unit()      maps the top 53 bits to a double in [0, 1).
///   - below(n)    returns floor(next() / 2^64 * n) via 128-bit multiply.
///   - Substreams  derive(seed, index) mixes the pair into a fresh seed, so
///                 per-sentence / per-level streams are schedule independent.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    bool bernoulli(double p) { return unit() < p; }

    /// MurmurHash3 64-bit finalizer.
    static uint64_t mix(uint64_t z) {
        z ^= z >> 33;
        z *= 0xFF51AFD7ED558CCDULL;
        z ^= z >> 33;
        z *= 0xC4CEB9FE1A85EC53ULL;
        z ^= z >> 33;
        return z;
    }

    /// Deterministic substream seed for (seed, index).
    static uint64_t derive(uint64_t seed, uint64_t index) {
        return mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL));
    }

private:
    uint64_t state_;
};

}  // namespace mtr
