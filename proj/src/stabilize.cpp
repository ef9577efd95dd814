#include "arw/stabilize.hpp"

#include <deque>
#include <set>

#include "arw/rng.hpp"

namespace arw {

const char* name(Strategy s) noexcept {
    switch (s) {
        case Strategy::LeftmostActive: return "leftmost";
        case Strategy::RightmostActive: return "rightmost";
        case Strategy::ClosestToOrigin: return "closest";
        case Strategy::SeededRandomActive: return "random";
        case Strategy::QueueOrder: return "queue";
    }
    return "?";
}

void StabilizeRequest::validate() const {
    if (target.empty()) throw Error("stabilize: empty target region");
    if (!kill.covers(target)) throw Error("stabilize: kill region must contain target");
    if (!initial.window().covers(kill))
        throw Error("stabilize: window must contain kill region");
    for (const Interval& z : no_sleep_zone) {
        if (!kill.covers(z)) throw Error("stabilize: no-sleep zone outside kill region");
        if (!z.empty() && z.lo <= target.hi && target.lo <= z.hi)
            throw Error("stabilize: no-sleep zone overlaps target");
    }
}

namespace {

bool in_any(const std::vector<Interval>& zones, int x) {
    for (const Interval& z : zones)
        if (z.contains(x)) return true;
    return false;
}

} // namespace

StabilizationReport stabilize(const StabilizeRequest& request, InstructionArray& array) {
    request.validate();
    for (const Interval& z : request.no_sleep_zone)
        if (!z.empty()) array.set_jump_only(z);

    Config cfg = request.initial;
    const Interval kill = request.kill;
    auto tracked = [&](int x) {
        return request.target.contains(x) || in_any(request.no_sleep_zone, x);
    };

    // No active particle may start outside the tracked region.
    for (int x = kill.lo; x <= kill.hi; ++x)
        if (cfg.cell(x).is_active() && !tracked(x))
            throw Error("stabilize: active particle outside target and no-sleep zones");

    const Strategy strategy = request.strategy;
    const bool left_cursor = strategy == Strategy::LeftmostActive;
    const bool right_cursor = strategy == Strategy::RightmostActive;

    std::size_t active_count = 0;
    int cursor = left_cursor ? kill.lo : kill.hi;
    std::set<int> active_set;
    std::deque<int> fifo;
    for (int x = kill.lo; x <= kill.hi; ++x) {
        if (!cfg.cell(x).is_active() || !tracked(x)) continue;
        ++active_count;
        if (!left_cursor && !right_cursor) {
            if (strategy == Strategy::QueueOrder) fifo.push_back(x);
            else active_set.insert(x);
        }
    }

    SmallRng rng(request.strategy_seed);
    auto pick = [&]() -> int {
        if (left_cursor) {
            while (!(tracked(cursor) && cfg.cell(cursor).is_active())) ++cursor;
            return cursor;
        }
        if (right_cursor) {
            while (!(tracked(cursor) && cfg.cell(cursor).is_active())) --cursor;
            return cursor;
        }
        switch (strategy) {
            case Strategy::ClosestToOrigin: {
                auto it = active_set.lower_bound(0);
                if (it == active_set.end()) return *std::prev(it);
                if (it == active_set.begin()) return *it;
                const int pos = *it;
                const int neg = *std::prev(it);
                return pos <= -neg ? pos : neg;  // tie goes to the positive side
            }
            case Strategy::SeededRandomActive: {
                auto it = active_set.begin();
                std::advance(it, static_cast<long>(rng.below(active_set.size())));
                return *it;
            }
            case Strategy::QueueOrder:
            default: {
                for (;;) {
                    const int x = fifo.front();
                    fifo.pop_front();
                    if (tracked(x) && cfg.cell(x).is_active()) return x;
                }
            }
        }
    };

    auto note_activated = [&](int d) {
        if (!tracked(d)) return;
        ++active_count;
        if (left_cursor) {
            if (d < cursor) cursor = d;
        } else if (right_cursor) {
            if (d > cursor) cursor = d;
        } else if (strategy == Strategy::QueueOrder) {
            fifo.push_back(d);
        } else {
            active_set.insert(d);
        }
    };
    auto note_deactivated = [&](int x) {
        if (!tracked(x)) return;
        --active_count;
        if (!left_cursor && !right_cursor && strategy != Strategy::QueueOrder)
            active_set.erase(x);
    };

    StabilizationReport rep;
    while (active_count > 0) {
        if (rep.topplings >= request.budget) {
            rep.truncated = true;
            break;
        }
        const int x = pick();
        const ToppleEvent ev = topple(cfg, array, x, ToppleMode::Legal, kill);
        ++rep.topplings;
        ++rep.odometer.at(x);

        if (!cfg.cell(x).is_active()) note_deactivated(x);
        else if (strategy == Strategy::QueueOrder) fifo.push_back(x);

        if (ev.killed) {
            ++rep.exits_total;
            if (ev.destination < kill.lo) ++rep.exits_left;
            else ++rep.exits_right;
        } else if (ev.moved) {
            const SiteContent& d = cfg.cell(ev.destination);
            const bool newly_active = ev.woke_destination || d.count == 1;
            if (newly_active) note_activated(ev.destination);
        }
    }
    rep.final = std::move(cfg);
    return rep;
}

Config make_segment_config(int n, const std::vector<std::uint32_t>& counts) {
    const Interval v = segment(n);
    if (static_cast<int>(counts.size()) != v.length())
        throw Error("make_segment_config: counts size must equal n");
    Config cfg(v);
    for (int i = 0; i < v.length(); ++i)
        if (counts[static_cast<std::size_t>(i)] > 0)
            cfg.at(v.lo + i) = SiteContent::active(counts[static_cast<std::size_t>(i)]);
    return cfg;
}

namespace {

// Copies the particles of src onto dst (windows must be compatible).
void overlay(Config& dst, const Config& src) {
    const Interval w = src.window();
    for (int x = w.lo; x <= w.hi; ++x) {
        const SiteContent& c = src.at(x);
        if (!c.is_empty()) dst.at(x) = c;
    }
}

} // namespace

StabilizationReport exit_report(const Config& eta, int n, const ModelParams& params,
                                std::uint64_t seed, std::uint64_t budget) {
    const Interval v = segment(n);
    StabilizeRequest req;
    req.initial = Config(v);
    overlay(req.initial, eta);
    req.target = v;
    req.kill = v;
    req.budget = budget;
    InstructionArray array(params, seed);
    return stabilize(req, array);
}

std::uint64_t exit_count(const Config& eta, int n, const ModelParams& params,
                         std::uint64_t seed, std::uint64_t budget) {
    return exit_report(eta, n, params, seed, budget).exits_total;
}

NmlReport stabilize_with_nml(const Config& eta, int n, Interval w,
                             const ModelParams& params, std::uint64_t seed,
                             std::uint64_t budget) {
    const Interval v = segment(n);
    if (!w.covers(v)) throw Error("stabilize_with_nml: W must contain V_n");

    const Interval left_strip{w.lo, v.lo - 1};
    const Interval right_strip{v.hi + 1, w.hi};

    InstructionArray array(params, seed);
    if (!left_strip.empty()) array.set_jump_only(left_strip);
    if (!right_strip.empty()) array.set_jump_only(right_strip);

    Config cfg(w);
    overlay(cfg, eta);

    // With a right strip present, the inner region is U = left strip + V_n
    // and we pick the rightmost active particle of U, escorting right
    // leavers. Otherwise we pick the leftmost active particle of V_n and
    // escort left leavers, so that one-sided strips match the one-sided
    // procedure exactly.
    const bool rightward = !right_strip.empty();
    const Interval inner = rightward ? Interval{w.lo, v.hi} : v;

    NmlReport rep;
    std::size_t active_count = 0;
    int cursor = rightward ? inner.hi : inner.lo;
    for (int x = inner.lo; x <= inner.hi; ++x)
        if (cfg.cell(x).is_active()) ++active_count;

    auto note_activated = [&](int d) {
        if (!inner.contains(d)) return;
        ++active_count;
        if (rightward) {
            if (d > cursor) cursor = d;
        } else if (d < cursor) {
            cursor = d;
        }
    };

    // Walks one particle, by acceptable topplings of its current site,
    // until it steps out of W. Sleep instructions are consumed as no-ops
    // (the particle is immediately rewoken). Returns false on budget.
    auto escort = [&](int pos) -> bool {
        while (w.contains(pos)) {
            if (rep.topplings >= budget) return false;
            const Instruction ins = array.consume(pos);
            ++rep.topplings;
            ++rep.odometer.at(pos);
            if (ins == Instruction::Sleep) continue;
            const int dest = pos + (ins == Instruction::JumpRight ? 1 : -1);
            SiteContent& c = cfg.cell(pos);
            const bool site_emptied = (c.count == 1);
            if (site_emptied) c = SiteContent::empty();
            else --c.count;
            if (site_emptied && inner.contains(pos)) --active_count;
            if (!w.contains(dest)) {
                ++rep.exits;
                return true;
            }
            SiteContent& d = cfg.cell(dest);
            if (d.is_sleeping()) {
                d = SiteContent::active(2);
                note_activated(dest);
            } else if (d.is_active()) {
                ++d.count;
            } else {
                d = SiteContent::active(1);
                note_activated(dest);
            }
            pos = dest;
        }
        return true;
    };

    while (active_count > 0) {
        if (rep.topplings >= budget) {
            rep.truncated = true;
            break;
        }
        if (rightward) {
            while (!cfg.cell(cursor).is_active() || cursor > inner.hi) --cursor;
        } else {
            while (!cfg.cell(cursor).is_active() || cursor < inner.lo) ++cursor;
        }
        const int x = cursor;
        const ToppleEvent ev = topple(cfg, array, x, ToppleMode::Legal, w);
        ++rep.topplings;
        ++rep.odometer.at(x);
        if (!cfg.cell(x).is_active()) --active_count;
        if (ev.killed) {
            ++rep.exits;
        } else if (ev.moved) {
            const int d = ev.destination;
            const bool newly_active = ev.woke_destination || cfg.cell(d).count == 1;
            if (inner.contains(d)) {
                if (newly_active) note_activated(d);
            } else if (!escort(d)) {
                rep.truncated = true;
                break;
            }
        }
    }
    return rep;
}

TrapResult trap_in_buffer(std::uint64_t k, int ell, bool left_side,
                          const ModelParams& params, std::uint64_t seed) {
    InstructionArray array(params, seed);
    const int dir = left_side ? -1 : 1;
    TrapResult res;
    int rest = 0;  // buffer slots are 1..ell, outward
    for (std::uint64_t j = 0; j < k; ++j) {
        int slot = rest + 1;
        for (;;) {
            if (slot > ell) return res;  // walked past the buffer: failure
            if (array.consume(dir * slot) == Instruction::Sleep) {
                rest = slot;
                break;
            }
            ++res.jumps_used;
            ++slot;
        }
    }
    res.success = true;
    return res;
}

SpreadResult two_step_spread(const Config& eta, int n, int ell,
                             const ModelParams& params, std::uint64_t seed,
                             std::uint64_t budget) {
    const Interval v = segment(n);
    const Interval v2 = segment(n + 2 * ell);

    StabilizeRequest req;
    req.initial = Config(v2);
    overlay(req.initial, eta);
    req.target = v;
    req.kill = v2;
    if (ell > 0) {
        req.no_sleep_zone.push_back({v2.lo, v.lo - 1});
        req.no_sleep_zone.push_back({v.hi + 1, v2.hi});
    }
    req.budget = budget;

    InstructionArray array(params, derive_seed(seed, 1));
    const StabilizationReport step1 = stabilize(req, array);
    SpreadResult res;
    res.m_prime = step1.exits_total;
    if (step1.truncated) {
        res.truncated = true;
        return res;
    }
    const TrapResult left = trap_in_buffer(step1.exits_left, ell, true, params,
                                           derive_seed(seed, 2));
    const TrapResult right = trap_in_buffer(step1.exits_right, ell, false, params,
                                            derive_seed(seed, 3));
    res.no_exit_enlarged = left.success && right.success;
    return res;
}

} // namespace arw
