#include "arw/coupling.hpp"

#include <algorithm>
#include <ostream>

#include "json.hpp"

#include "arw/rng.hpp"
#include "arw/stabilize.hpp"
#include "arw/stats.hpp"
#include "arw/topple.hpp"

namespace arw {

namespace {
// Wander room outside the coarse window, so that marching walks rarely
// fall off the edge of the simulated line.
constexpr int kMarginBlocks = 512;
}

const char* name(StepCase c) noexcept {
    switch (c) {
        case StepCase::Good: return "good";
        case StepCase::Bad: return "bad";
        case StepCase::Multiplicity: return "multiplicity";
    }
    return "?";
}

void BlockSpec::validate() const {
    if (n < 1) throw Error("block spec: n must be >= 1");
    if (static_cast<int>(eta.size()) != n)
        throw Error("block spec: eta must have one count per site of the segment");
    if (eta_mass() == 0) throw Error("block spec: eta must be nonzero");
    if (!(q >= 0.0 && q <= 1.0)) throw Error("block spec: q must lie in [0,1]");
    if (K < 1) throw Error("block spec: K must be >= 1");
}

std::uint64_t BlockSpec::eta_mass() const {
    std::uint64_t total = 0;
    for (auto c : eta) total += c;
    return total;
}

Interval BlockSpec::block(int k) const {
    const Interval v = segment(n);
    return {v.lo + k * n, v.hi + k * n};
}

std::pair<Config, CoarseConfig> build_block_config(const BlockSpec& spec,
                                                   std::uint64_t seed) {
    spec.validate();
    CoarseConfig coarse(spec.K);
    SmallRng rng(seed);
    for (int k = -spec.K; k <= spec.K; ++k)
        if (rng.uniform() < spec.q) coarse.at(k) = SiteContent::active(1);

    const Interval lo_block = spec.block(-spec.K - kMarginBlocks);
    const Interval hi_block = spec.block(spec.K + kMarginBlocks);
    Config xi(Interval{lo_block.lo, hi_block.hi});
    for (int k = -spec.K; k <= spec.K; ++k) {
        if (!coarse.at(k).is_active()) continue;
        const Interval b = spec.block(k);
        for (int i = 0; i < spec.n; ++i)
            if (spec.eta[static_cast<std::size_t>(i)] > 0)
                xi.at(b.lo + i) =
                    SiteContent::active(spec.eta[static_cast<std::size_t>(i)]);
    }
    return {std::move(xi), std::move(coarse)};
}

std::uint64_t forced_march(Config& xi, InstructionArray& tau,
                           std::vector<int> sources, std::vector<int> destinations,
                           int inner_limit, bool positive_side,
                           std::uint64_t budget) {
    if (sources.size() != destinations.size())
        throw Error("forced_march: sources and destinations must pair up");
    auto outermost_first = [positive_side](int a, int b) {
        return positive_side ? a > b : a < b;
    };
    std::sort(sources.begin(), sources.end(), outermost_first);
    std::sort(destinations.begin(), destinations.end(), outermost_first);

    std::uint64_t topplings = 0;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        int pos = sources[i];
        const int dest = destinations[i];
        if (xi.at(pos).is_empty()) throw Error("forced_march: no particle at source");
        while (pos != dest) {
            if (positive_side ? pos < inner_limit : pos > inner_limit)
                throw Error("forced_march: walked past the inner limit");
            if (topplings >= budget) throw MarchBudgetExhausted();
            SiteContent& c = xi.cell(pos);
            if (c.is_sleeping()) c = SiteContent::active(1);  // acceptable: wake first
            const Instruction ins = tau.consume(pos);
            ++topplings;
            if (ins == Instruction::Sleep) continue;  // no-op on the walked particle
            const int next = pos + (ins == Instruction::JumpRight ? 1 : -1);
            if (!xi.window().contains(next)) throw BlockWindowOverflow(next);
            if (c.count == 1) c = SiteContent::empty();
            else --c.count;
            SiteContent& d = xi.cell(next);
            if (d.is_sleeping()) d = SiteContent::active(2);
            else if (d.is_active()) ++d.count;
            else d = SiteContent::active(1);
            pos = next;
        }
    }
    return topplings;
}

namespace {

struct CouplingRun {
    const BlockSpec& spec;
    const ModelParams& params;
    Config xi;
    CoarseConfig xip;
    InstructionArray tau;
    std::uint64_t aux_master;
    std::uint64_t aux_counter = 0;
    std::uint64_t topple_budget;
    Odometer h_prime;
    Odometer coarse_jumps;
    CouplingTrace trace;
    std::uint64_t mass;
    Interval fine;

    CouplingRun(const BlockSpec& s, const ModelParams& p, std::uint64_t seed,
                std::uint64_t budget)
        : spec(s), params(p), tau(p, derive_seed(seed, 1)),
          aux_master(derive_seed(seed, 2)), topple_budget(budget),
          mass(s.eta_mass()) {
        auto built = build_block_config(spec, derive_seed(seed, 0));
        xi = std::move(built.first);
        xip = std::move(built.second);
        fine = xi.window();
    }

    std::uint32_t eta_bar(int k, int x) const {
        return spec.eta[static_cast<std::size_t>(x - spec.block(k).lo)];
    }

    // A fresh coarse instruction at site k, realized by an independent
    // block stabilization: sleep iff the stabilization is good.
    Instruction fresh_instruction(int k) {
        const Config eta_cfg = make_segment_config(spec.n, spec.eta);
        const bool good =
            exit_count(eta_cfg, spec.n, params,
                       derive_seed(aux_master, aux_counter++)) == 0;
        if (good) return Instruction::Sleep;
        return k > 0 ? Instruction::JumpLeft : Instruction::JumpRight;
    }

    void coarse_add(int l) {
        SiteContent& c = xip.at(l);
        if (c.is_sleeping()) c = SiteContent::active(2);
        else if (c.is_active()) ++c.count;
        else c = SiteContent::active(1);
    }

    // Legal topplings of the leftmost active site of B_k until the block
    // is stable. Returns true iff no particle left the block.
    bool stabilize_block(int k, std::vector<int>& escapes) {
        const Interval b = spec.block(k);
        std::uint64_t phase = 0;
        int scan = b.lo;
        for (;;) {
            while (scan <= b.hi && !xi.cell(scan).is_active()) ++scan;
            if (scan > b.hi) break;
            if (phase >= topple_budget) throw MarchBudgetExhausted();
            const ToppleEvent ev = topple(xi, tau, scan, ToppleMode::Legal, fine);
            ++phase;
            ++trace.fine_topplings;
            if (ev.killed) throw BlockWindowOverflow(ev.destination);
            if (ev.moved && !b.contains(ev.destination))
                escapes.push_back(ev.destination);
            if (scan > b.lo) --scan;  // a left jump may have activated scan-1
        }
        return escapes.empty();
    }

    std::vector<int> eta_destinations(int l) const {
        const Interval b = spec.block(l);
        std::vector<int> dests;
        for (int i = 0; i < spec.n; ++i)
            for (std::uint32_t c = 0; c < spec.eta[static_cast<std::size_t>(i)]; ++c)
                dests.push_back(b.lo + i);
        return dests;
    }

    void march_to(int k, int l, std::vector<int> sources) {
        if (sources.size() != mass)
            throw Error("coupling: march does not carry exactly one copy of eta");
        const Interval bl = spec.block(l);
        const int limit = k > 0 ? bl.lo : bl.hi;
        trace.fine_topplings +=
            forced_march(xi, tau, std::move(sources), eta_destinations(l), limit,
                         k > 0, topple_budget);
    }

    [[noreturn]] void violated(const std::string& what) const {
        throw Error("coupling invariant violated: " + what);
    }

    void check_invariants() const {
        if (!xip.at(0).is_empty()) return;  // items below are conditional

        // Nothing may remain just outside the coarse window between steps
        // (escapes land one site out, and marches run to completion).
        const Interval left_guard = spec.block(-spec.K - 1);
        const Interval right_guard = spec.block(spec.K + 1);
        for (int x = left_guard.lo; x <= left_guard.hi; ++x)
            if (!xi.cell(x).is_empty()) violated("particle left in the margin");
        for (int x = right_guard.lo; x <= right_guard.hi; ++x)
            if (!xi.cell(x).is_empty()) violated("particle left in the margin");

        // Block/coarse coherence.
        for (int k = -spec.K; k <= spec.K; ++k) {
            const Interval b = spec.block(k);
            const SiteContent& c = xip.at(k);
            std::uint64_t total = 0;
            bool any_active = false;
            bool dominates = true;
            bool exact = true;
            for (int x = b.lo; x <= b.hi; ++x) {
                const SiteContent& s = xi.cell(x);
                total += s.particles();
                if (s.is_active()) any_active = true;
                const std::uint32_t want = eta_bar(k, x);
                if (s.particles() < want) dominates = false;
                if (!(s.is_active() ? s.count == want && want > 0
                                    : (s.is_empty() && want == 0)))
                    exact = false;
            }
            if (c.is_empty()) {
                if (total != 0) violated("empty coarse site over a non-empty block");
            } else if (c.is_sleeping()) {
                if (any_active || total != mass)
                    violated("sleeping coarse site without exactly the sleeping copy");
            } else {
                if (total < c.count * mass)
                    violated("active coarse site with too few particles");
                if (!dominates) violated("active block does not contain a copy");
                if (c.count == 1 && !exact)
                    violated("single-copy block is not exactly a copy");
            }
        }

        // Sleeping blocks never farther from the origin than single copies.
        for (int side : {1, -1}) {
            int max_sleep = 0, min_one = spec.K + 1;
            for (int d = 1; d <= spec.K; ++d) {
                const SiteContent& c = xip.at(side * d);
                if (c.is_sleeping()) max_sleep = std::max(max_sleep, d);
                if (c.is_active() && c.count == 1) min_one = std::min(min_one, d);
            }
            if (max_sleep > min_one)
                violated("sleeping block beyond an active single copy");
        }

        // The block of the origin stays untoppled.
        const Interval b0 = spec.block(0);
        for (int x = b0.lo; x <= b0.hi; ++x)
            if (tau.used(x) != 0) violated("origin block toppled while coarse origin empty");
    }

    // One recursion step; returns false when the run halts.
    bool step() {
        if (!xip.at(0).is_empty()) {
            trace.coarse_origin_visited = true;
            return false;
        }
        int k = 0;
        for (int d = 1; d <= spec.K && k == 0; ++d) {
            if (xip.at(d).is_active()) k = d;
            else if (xip.at(-d).is_active()) k = -d;
        }
        if (k == 0) {
            trace.coarse_stable = true;
            return false;
        }
        const int l = k > 0 ? k - 1 : k + 1;

        StepRecord rec;
        rec.j = trace.steps.size();
        rec.k = k;

        if (xip.at(k).count == 1) {
            std::vector<int> escapes;
            const bool good = stabilize_block(k, escapes);
            ++h_prime.at(k);  // write at h'(k)+1, consumed by this very step
            rec.wrote = true;
            rec.tau_prime_reads = 1;
            if (good) {
                rec.kase = StepCase::Good;
                rec.tau_prime_write = Instruction::Sleep;
                ++trace.sleeps_written;
                xip.at(k) = SiteContent::sleeping();
            } else {
                rec.kase = StepCase::Bad;
                rec.tau_prime_write =
                    k > 0 ? Instruction::JumpLeft : Instruction::JumpRight;
                ++trace.jumps_written;
                ++coarse_jumps.at(k);
                xip.at(k) = SiteContent::empty();
                coarse_add(l);
                if (l != 0) {
                    std::vector<int> sources = escapes;
                    const Interval b = spec.block(k);
                    for (int x = b.lo; x <= b.hi; ++x)
                        if (xi.cell(x).is_sleeping()) sources.push_back(x);
                    march_to(k, l, std::move(sources));
                    rec.marched = static_cast<std::uint32_t>(mass);
                }
            }
        } else {
            rec.kase = StepCase::Multiplicity;
            if (l != 0) {
                // Walk the surplus away, leaving a copy behind.
                std::vector<int> sources;
                const Interval b = spec.block(k);
                if (k > 0) {
                    for (int x = b.hi; x >= b.lo && sources.size() < mass; --x)
                        for (std::uint32_t e = xi.cell(x).particles();
                             e > eta_bar(k, x) && sources.size() < mass; --e)
                            sources.push_back(x);
                } else {
                    for (int x = b.lo; x <= b.hi && sources.size() < mass; ++x)
                        for (std::uint32_t e = xi.cell(x).particles();
                             e > eta_bar(k, x) && sources.size() < mass; --e)
                            sources.push_back(x);
                }
                march_to(k, l, std::move(sources));
                rec.marched = static_cast<std::uint32_t>(mass);
            }
            // Read fresh coarse instructions until the first jump.
            for (;;) {
                ++rec.tau_prime_reads;
                ++h_prime.at(k);
                const Instruction ins = fresh_instruction(k);
                if (ins == Instruction::Sleep) {
                    ++trace.fresh_sleeps;  // no-op: the coarse site holds >= 2
                    continue;
                }
                ++trace.fresh_jumps;
                if ((ins == Instruction::JumpLeft) != (k > 0)) ++trace.wrong_direction;
                break;
            }
            ++coarse_jumps.at(k);
            --xip.at(k).count;
            coarse_add(l);
        }

        trace.steps.push_back(rec);
        check_invariants();
        return true;
    }

    void finish() {
        if (!xip.at(0).is_empty()) trace.coarse_origin_visited = true;
        const Interval b0 = spec.block(0);
        for (int x = b0.lo; x <= b0.hi; ++x)
            if (tau.used(x) != 0) trace.block0_odometer_nonzero = true;
        if (trace.aborted || trace.coarse_origin_visited) return;
        for (int k = -spec.K; k <= spec.K; ++k) {
            if (k == 0) continue;
            const std::uint64_t bound =
                static_cast<std::uint64_t>(k > 0 ? k - 1 : -k - 1);
            const std::uint64_t jumps = coarse_jumps.get(k);
            if (jumps > bound)
                trace.max_coarse_jumps_excess =
                    std::max(trace.max_coarse_jumps_excess, jumps - bound);
        }
    }
};

} // namespace

CouplingTrace run_coupling(const BlockSpec& spec, const ModelParams& params,
                           std::uint64_t seed, std::uint64_t step_budget,
                           std::uint64_t topple_budget) {
    spec.validate();
    params.validate();
    CouplingRun run(spec, params, seed, topple_budget);
    run.check_invariants();
    try {
        while (run.step()) {
            if (run.trace.steps.size() >= step_budget) {
                run.trace.aborted = true;
                run.trace.aborted_reason = "step budget exhausted";
                break;
            }
        }
    } catch (const MarchBudgetExhausted& e) {
        run.trace.aborted = true;
        run.trace.aborted_reason = e.what();
    } catch (const BlockWindowOverflow& e) {
        run.trace.aborted = true;
        run.trace.aborted_reason = e.what();
    } catch (const StackDepthExceeded& e) {
        run.trace.aborted = true;
        run.trace.aborted_reason = e.what();
    }
    run.finish();
    return run.trace;
}

TauPrimeReport tau_prime_marginal_stats(const std::vector<CouplingTrace>& traces,
                                        double p_hat) {
    TauPrimeReport rep;
    rep.p_hat = p_hat;
    for (const CouplingTrace& t : traces) {
        rep.sleeps += t.sleeps_written;
        rep.consumed += t.sleeps_written + t.jumps_written;
        rep.wrong_direction += t.wrong_direction;
    }
    if (rep.consumed == 0)
        throw EmptySample("tau_prime_marginal_stats: no consumed instructions");
    const WilsonInterval ci = wilson_interval(rep.sleeps, rep.consumed);
    rep.sleep_freq = ci.estimate;
    rep.ci_lo = ci.lo;
    rep.ci_hi = ci.hi;
    rep.within_ci = ci.lo <= p_hat && p_hat <= ci.hi;
    return rep;
}

Config random_offset_sample(const Config& xi, int n, std::uint64_t seed) {
    const Interval v = segment(n);
    SmallRng rng(seed);
    const int y = v.lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const Interval w = xi.window();
    Config out(Interval{w.lo + y, w.hi + y});
    for (int x = w.lo; x <= w.hi; ++x) out.at(x + y) = xi.at(x);
    out.killed = xi.killed;
    return out;
}

void write_trace_jsonl(const CouplingTrace& trace, std::ostream& out) {
    for (const StepRecord& s : trace.steps) {
        nlohmann::json rec{
            {"j", s.j},
            {"k", s.k},
            {"case", name(s.kase)},
            {"marched", s.marched},
            {"tau_prime_reads", s.tau_prime_reads},
        };
        if (s.wrote) rec["tau_prime_write"] = name(s.tau_prime_write);
        else rec["tau_prime_write"] = nullptr;
        out << rec.dump() << '\n';
    }
    nlohmann::json summary{
        {"steps", trace.steps.size()},
        {"coarse_origin_visited", trace.coarse_origin_visited},
        {"block0_odometer_nonzero", trace.block0_odometer_nonzero},
        {"coarse_stable", trace.coarse_stable},
        {"aborted", trace.aborted},
        {"aborted_reason", trace.aborted_reason},
        {"fine_topplings", trace.fine_topplings},
    };
    out << summary.dump() << '\n';
}

} // namespace arw
