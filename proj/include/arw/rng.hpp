#ifndef ARW_RNG_HPP
#define ARW_RNG_HPP

#include <cstdint>

namespace arw {

// splitmix64 finalizer; the workhorse behind all counter-based randomness.
inline std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Order-independent mix of (seed, site, index). Reading stacks in any
// order yields the same values, which the abelian checks rely on.
inline std::uint64_t mix3(std::uint64_t seed, std::int64_t site,
                          std::uint64_t index) noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(site) ^ 0x6a09e667f3bcc909ull);
    h = splitmix64(h ^ index);
    return splitmix64(h ^ seed);
}

// Uniform double in [0,1) from 64 random bits.
inline double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Trial seeds are derived, never sequential, so trial fan-out order
// (and thread count) cannot change any stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(master ^ splitmix64(stream ^ 0x2545f4914f6cdd1dull));
}

// Small deterministic generator for ancillary choices (random strategies,
// initial configurations). xorshift128+ seeded via splitmix64.
class SmallRng {
public:
    explicit SmallRng(std::uint64_t seed) noexcept {
        s0_ = splitmix64(seed);
        s1_ = splitmix64(s0_);
    }

    std::uint64_t next() noexcept {
        std::uint64_t x = s0_;
        const std::uint64_t y = s1_;
        s0_ = y;
        x ^= x << 23;
        s1_ = x ^ y ^ (x >> 17) ^ (y >> 26);
        return s1_ + y;
    }

    double uniform() noexcept { return to_unit(next()); }

    // Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t s0_, s1_;
};

} // namespace arw

#endif
