#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

// Deterministic random helpers. The standard distributions are
// implementation-defined, so everything that must reproduce byte-identical
// output across toolchains draws through these instead.

namespace ocean::rng {

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ull) {
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Stream {
  public:
    explicit Stream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // unbiased integer in [0, n)
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % n;
    }

    // uniform double in [0, 1) with 53 random bits
    double next_unit() { return (eng_() >> 11) * 0x1.0p-53; }

    // Box-Muller; one value per call, no state carried between calls
    double next_gaussian() {
        double u1, u2;
        do {
            u1 = next_unit();
        } while (u1 <= 0.0);
        u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    std::mt19937_64 eng_;
};

// uniform in [0,1) derived from a single hash value
inline double unit_from_hash(std::uint64_t h) { return (mix64(h) >> 11) * 0x1.0p-53; }

inline double gaussian_from_hash(std::uint64_t h) {
    double u1 = (mix64(h) >> 11) * 0x1.0p-53;
    double u2 = (mix64(h ^ 0xa5a5a5a5a5a5a5a5ull) >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace ocean::rng
