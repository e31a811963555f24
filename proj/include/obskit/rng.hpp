#pragma once

#include <cstdint>

namespace obskit {

/// Deterministic 64-bit generator (splitmix64).  Used everywhere randomness
/// appears so that seeded runs reproduce bit-for-bit across platforms; the
/// standard <random> distributions are implementation-defined and would not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Derive an independent stream, e.g. one per sweep row.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        Rng r(seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
        return r.next_u64();
    }

private:
    std::uint64_t state_;
};

} // namespace obskit
