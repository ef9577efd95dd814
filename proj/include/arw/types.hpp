#ifndef ARW_TYPES_HPP
#define ARW_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace arw {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Toppling a site with no particle.
struct ToppleOnEmpty : Error {
    explicit ToppleOnEmpty(int site)
        : Error("legal/acceptable toppling at empty site " + std::to_string(site)) {}
};

// Legal toppling requested on a sleeping site.
struct ToppleSleepingWhenLegal : Error {
    explicit ToppleSleepingWhenLegal(int site)
        : Error("legal toppling at sleeping site " + std::to_string(site)) {}
};

// A per-site stack was read past its configured depth cap.
struct StackDepthExceeded : Error {
    StackDepthExceeded(int site, std::uint64_t cap)
        : Error("instruction stack at site " + std::to_string(site) +
                " read past depth cap " + std::to_string(cap)) {}
};

// A particle moved outside the simulated window without being killed.
struct WindowOverflow : Error {
    explicit WindowOverflow(int site)
        : Error("particle left the simulated window at site " + std::to_string(site)) {}
};

struct EmptySample : Error {
    using Error::Error;
};

// Closed integer interval [lo, hi]; empty iff lo > hi.
struct Interval {
    int lo = 0;
    int hi = -1;

    bool contains(int x) const noexcept { return lo <= x && x <= hi; }
    bool empty() const noexcept { return lo > hi; }
    int length() const noexcept { return empty() ? 0 : hi - lo + 1; }
    bool covers(const Interval& other) const noexcept {
        return other.empty() || (lo <= other.lo && other.hi <= hi);
    }
};

// The segment V_n = (-n/2, n/2] of n sites.
inline Interval segment(int n) {
    if (n < 0) throw Error("segment length must be >= 0");
    const int hi = n / 2;
    return Interval{hi - n + 1, hi};
}

struct ModelParams {
    double lambda = 1.0;   // sleep rate, finite and positive
    double p_right = 0.5;  // probability that a jump goes to the right neighbour

    void validate() const {
        if (!(lambda > 0.0) || !(lambda < 1e300))
            throw Error("lambda must be positive and finite");
        if (!(p_right >= 0.0 && p_right <= 1.0))
            throw Error("p_right must lie in [0,1]");
    }
};

// Occupancy of one site: empty, one sleeping particle, or k >= 1 active.
struct SiteContent {
    enum class Tag : std::uint8_t { Empty, Sleeping, Active };

    Tag tag = Tag::Empty;
    std::uint32_t count = 0;  // meaningful only when Active

    static SiteContent empty() noexcept { return {}; }
    static SiteContent sleeping() noexcept { return {Tag::Sleeping, 0}; }
    static SiteContent active(std::uint32_t k) {
        if (k == 0) throw Error("active site needs count >= 1");
        return {Tag::Active, k};
    }

    bool is_empty() const noexcept { return tag == Tag::Empty; }
    bool is_sleeping() const noexcept { return tag == Tag::Sleeping; }
    bool is_active() const noexcept { return tag == Tag::Active; }
    bool is_stable() const noexcept { return tag != Tag::Active; }

    std::uint32_t particles() const noexcept {
        switch (tag) {
            case Tag::Empty: return 0;
            case Tag::Sleeping: return 1;
            case Tag::Active: return count;
        }
        return 0;
    }

    bool operator==(const SiteContent& o) const noexcept {
        return tag == o.tag && (tag != Tag::Active || count == o.count);
    }
    bool operator!=(const SiteContent& o) const noexcept { return !(*this == o); }
};

// A configuration on a finite window of Z, plus the running kill count.
class Config {
public:
    Config() = default;
    explicit Config(Interval window)
        : window_(window), cells_(static_cast<std::size_t>(window.length())) {}

    const Interval& window() const noexcept { return window_; }

    SiteContent& at(int x) {
        if (!window_.contains(x)) throw WindowOverflow(x);
        return cells_[static_cast<std::size_t>(x - window_.lo)];
    }
    const SiteContent& at(int x) const {
        if (!window_.contains(x)) throw WindowOverflow(x);
        return cells_[static_cast<std::size_t>(x - window_.lo)];
    }
    // Unchecked access for hot loops; caller guarantees x is in the window.
    SiteContent& cell(int x) noexcept {
        return cells_[static_cast<std::size_t>(x - window_.lo)];
    }
    const SiteContent& cell(int x) const noexcept {
        return cells_[static_cast<std::size_t>(x - window_.lo)];
    }

    std::uint64_t killed = 0;

    std::uint64_t total_particles() const noexcept {
        std::uint64_t total = 0;
        for (const auto& c : cells_) total += c.particles();
        return total;
    }

    void add_active(int x, std::uint32_t k = 1) {
        SiteContent& c = at(x);
        if (c.is_sleeping()) {
            c = SiteContent::active(k + 1);
        } else if (c.is_active()) {
            c.count += k;
        } else if (k > 0) {
            c = SiteContent::active(k);
        }
    }

    bool operator==(const Config& o) const noexcept {
        return window_.lo == o.window_.lo && window_.hi == o.window_.hi &&
               cells_ == o.cells_ && killed == o.killed;
    }

private:
    Interval window_;
    std::vector<SiteContent> cells_;
};

enum class Instruction : std::uint8_t { Sleep, JumpLeft, JumpRight };

inline const char* name(Instruction i) noexcept {
    switch (i) {
        case Instruction::Sleep: return "sleep";
        case Instruction::JumpLeft: return "jump_left";
        case Instruction::JumpRight: return "jump_right";
    }
    return "?";
}

} // namespace arw

#endif
