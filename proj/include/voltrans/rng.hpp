#pragma once

#include <cstdint>

namespace voltrans {

/// splitmix64 step; also usable as a stateless hash of its argument.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    return splitmix64(s);
}

/// Deterministic generator with bit-stable output on every platform
/// (std:: distributions are implementation-defined, so they are avoided).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ^ 0x5851f42d4c957f2dULL) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    std::uint64_t state_;
};

} // namespace voltrans
