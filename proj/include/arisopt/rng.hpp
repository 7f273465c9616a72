#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <string_view>

// Counter-based random streams. Every consumer opens a stream keyed by
// (seed, trial, tag); streams with different keys are independent and a given
// key always replays the same sequence, so Monte-Carlo cells can be computed
// in any order (or in parallel) without changing results.

namespace arisopt {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Deterministic stream generator: the state is a pure function of
/// (key, draw index), i.e. SplitMix64 run over an incrementing counter.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t trial, std::string_view tag)
        : key_(mix(mix(mix(0x243f6a8885a308d3ull, seed), trial), fnv1a64(tag))) {}

    explicit Rng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [0, 1]; never exactly 0 (safe as a log argument).
    double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (pairs cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_pos();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly-symmetric complex normal with E|z|^2 = 1.
    std::complex<double> cnormal() {
        constexpr double inv_sqrt2 = 0.70710678118654752440;
        double re = normal();
        double im = normal();
        return {re * inv_sqrt2, im * inv_sqrt2};
    }

    /// Uniform phase in [0, 2*pi).
    double phase() { return 6.283185307179586476925286766559 * uniform(); }

private:
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace arisopt
