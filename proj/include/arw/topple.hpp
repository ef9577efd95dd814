#ifndef ARW_TOPPLE_HPP
#define ARW_TOPPLE_HPP

#include <cstdint>
#include <vector>

#include "arw/instructions.hpp"
#include "arw/site_map.hpp"
#include "arw/types.hpp"

namespace arw {

enum class ToppleMode : std::uint8_t {
    Legal,       // only sites holding an active particle
    Acceptable,  // any particle; a sleeper is woken first
};

struct ToppleEvent {
    Instruction instruction;
    bool slept = false;       // a lone particle fell asleep
    bool moved = false;       // a particle jumped
    int destination = 0;      // meaningful when moved
    bool killed = false;      // the jump left the kill region
    bool woke_destination = false;
};

// One application of the single-site toppling operator: consume the next
// instruction at `site` and update the configuration. Jumps landing
// outside `kill_region` remove the particle and bump config.killed.
inline ToppleEvent topple(Config& config, InstructionArray& array, int site,
                          ToppleMode mode, Interval kill_region) {
    SiteContent& c = config.at(site);
    if (c.is_empty()) throw ToppleOnEmpty(site);
    if (c.is_sleeping()) {
        if (mode == ToppleMode::Legal) throw ToppleSleepingWhenLegal(site);
        c = SiteContent::active(1);
    }

    ToppleEvent ev{array.consume(site)};
    if (ev.instruction == Instruction::Sleep) {
        // A sleep only takes effect on a lone particle.
        if (c.count == 1) {
            c = SiteContent::sleeping();
            ev.slept = true;
        }
        return ev;
    }

    const int dest = site + (ev.instruction == Instruction::JumpRight ? 1 : -1);
    if (c.count == 1)
        c = SiteContent::empty();
    else
        --c.count;
    ev.moved = true;
    ev.destination = dest;
    if (!kill_region.contains(dest)) {
        ++config.killed;
        ev.killed = true;
        return ev;
    }
    SiteContent& d = config.at(dest);
    if (d.is_sleeping()) {
        d = SiteContent::active(2);  // arrival wakes the sleeper
        ev.woke_destination = true;
    } else if (d.is_active()) {
        ++d.count;
    } else {
        d = SiteContent::active(1);
    }
    return ev;
}

inline bool is_stable_in(const Config& config, Interval region) {
    for (int x = region.lo; x <= region.hi; ++x)
        if (config.at(x).is_active()) return false;
    return true;
}

struct SequenceError : Error {
    SequenceError(std::size_t index, const char* what)
        : Error(std::string("toppling sequence failed at index ") +
                std::to_string(index) + ": " + what),
          failing_index(index) {}
    std::size_t failing_index;
};

// Applies the sites of `sequence` in order and returns the resulting
// configuration together with the per-site occurrence counts.
inline std::pair<Config, Odometer> apply_sequence(Config config,
                                                  InstructionArray& array,
                                                  const std::vector<int>& sequence,
                                                  ToppleMode mode,
                                                  Interval kill_region) {
    Odometer counts;
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        try {
            topple(config, array, sequence[i], mode, kill_region);
        } catch (const Error& e) {
            throw SequenceError(i, e.what());
        }
        ++counts.at(sequence[i]);
    }
    return {std::move(config), std::move(counts)};
}

} // namespace arw

#endif
