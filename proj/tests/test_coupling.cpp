#include "doctest.h"

#include <map>
#include <sstream>
#include <vector>

#include "arw/coupling.hpp"
#include "arw/rng.hpp"
#include "arw/stats.hpp"

using namespace arw;

namespace {

BlockSpec simple_spec(int n, int K, double q) {
    BlockSpec spec;
    spec.n = n;
    spec.K = K;
    spec.q = q;
    spec.eta.assign(static_cast<std::size_t>(n), 1);
    return spec;
}

} // namespace

TEST_CASE("block spec layout and validation") {
    const BlockSpec spec = simple_spec(5, 3, 0.5);
    CHECK(spec.eta_mass() == 5);
    CHECK(spec.block(0).lo == segment(5).lo);
    CHECK(spec.block(0).hi == segment(5).hi);
    CHECK(spec.block(1).lo == segment(5).lo + 5);
    CHECK(spec.block(-2).hi == segment(5).hi - 10);

    BlockSpec bad = spec;
    bad.q = 1.5;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = spec;
    bad.eta.clear();
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = spec;
    bad.eta.assign(5, 0);
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("build_block_config places eta copies where the coarse site is occupied") {
    const BlockSpec spec = simple_spec(4, 6, 0.5);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto [fine, coarse] = build_block_config(spec, seed);
        for (int k = -spec.K; k <= spec.K; ++k) {
            const Interval b = spec.block(k);
            std::uint64_t mass = 0;
            for (int x = b.lo; x <= b.hi; ++x) mass += fine.at(x).particles();
            if (coarse.at(k).is_active()) {
                CHECK(coarse.at(k).count == 1);
                CHECK(mass == spec.eta_mass());
                for (int x = b.lo; x <= b.hi; ++x)
                    CHECK(fine.at(x).particles() ==
                          spec.eta[static_cast<std::size_t>(x - b.lo)]);
            } else {
                CHECK(coarse.at(k).is_empty());
                CHECK(mass == 0);
            }
        }
    }
}

TEST_CASE("build_block_config occupancy frequency matches q") {
    const BlockSpec spec = simple_spec(3, 10, 0.3);
    std::uint64_t occupied = 0, cells = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        auto [fine, coarse] = build_block_config(spec, seed);
        for (int k = -spec.K; k <= spec.K; ++k) {
            if (!coarse.at(k).is_empty()) ++occupied;
            ++cells;
        }
    }
    const WilsonInterval ci = wilson_interval(occupied, cells);
    CHECK(ci.lo < 0.3);
    CHECK(ci.hi > 0.3);
}

TEST_CASE("coarse config window access") {
    CoarseConfig c(2);
    CHECK(c.stable());
    c.at(2) = SiteContent::active(1);
    CHECK(!c.stable());
    CHECK_THROWS_AS(c.at(3), WindowOverflow);
    CHECK_THROWS_AS(c.at(-3), WindowOverflow);
}

TEST_CASE("forced march walks a particle inward to its destination") {
    Config xi(Interval{-2, 30});
    xi.add_active(4);
    InstructionArray tau(ModelParams{1.0, 0.5}, 0);
    // Force: left, sleep (no-op while escorted), left, left.
    tau.override_at(4, 1, Instruction::JumpLeft);
    tau.override_at(3, 1, Instruction::Sleep);
    tau.override_at(3, 2, Instruction::JumpLeft);
    tau.override_at(2, 1, Instruction::JumpLeft);
    const std::uint64_t steps = forced_march(xi, tau, {4}, {1}, 1, true);
    CHECK(steps == 4);
    CHECK(xi.at(4).is_empty());
    CHECK(xi.at(1) == SiteContent::active(1));
}

TEST_CASE("forced march wakes sleepers it visits and delivers everyone") {
    // Strong leftward drift keeps the walk inside a modest window.
    Config xi(Interval{-2, 200});
    xi.add_active(8);
    xi.at(6) = SiteContent::sleeping();
    InstructionArray tau(ModelParams{0.2, 0.1}, 91);
    const std::uint64_t before = xi.total_particles();
    forced_march(xi, tau, {8, 6}, {2, 3}, 2, true);
    CHECK(xi.total_particles() == before);
    CHECK(xi.at(2).particles() + xi.at(3).particles() == 2);
    CHECK(xi.at(8).is_empty());
    CHECK(xi.at(6).is_empty());
}

TEST_CASE("forced march refuses to cross the inner limit") {
    Config xi(Interval{-10, 10});
    xi.add_active(2);
    InstructionArray tau(ModelParams{1.0, 0.5}, 0);
    tau.override_at(2, 1, Instruction::JumpLeft);
    tau.override_at(1, 1, Instruction::JumpLeft);
    tau.override_at(0, 1, Instruction::JumpLeft);
    CHECK_THROWS_AS(forced_march(xi, tau, {2}, {-3}, 1, true), Error);
}

TEST_CASE("forced march arrival count is a first passage time") {
    // A drift-free walk from 1 to 3 with inner wall at 0: mean number of
    // jumps is 3 (gambler's ruin with reflection via the wall guarantee
    // is not used; the walk simply cannot be asked to topple below 0).
    // Use the sleep-free count: every consumed non-sleep moves the walker.
    const ModelParams params{1.0, 1.0};  // p_right = 1: straight line
    Config xi(Interval{-2, 10});
    xi.add_active(1);
    InstructionArray tau(params, 17);
    const std::uint64_t steps = forced_march(xi, tau, {1}, {3}, 0, true);
    // With p_right = 1 every jump goes right; sleeps are no-ops, so the
    // walker consumes exactly 2 jumps plus however many sleeps it read.
    CHECK(xi.at(3) == SiteContent::active(1));
    std::uint64_t sleeps = 0;
    InstructionArray probe(params, 17);
    for (std::uint64_t i = 1; i <= tau.used(1); ++i)
        if (probe.peek(1, i) == Instruction::Sleep) ++sleeps;
    for (std::uint64_t i = 1; i <= tau.used(2); ++i)
        if (probe.peek(2, i) == Instruction::Sleep) ++sleeps;
    CHECK(steps == 2 + sleeps);
}

TEST_CASE("coupling with q = 0 is immediately stable") {
    const BlockSpec spec = simple_spec(3, 5, 0.0);
    const CouplingTrace trace = run_coupling(spec, ModelParams{1.0, 0.5}, 12);
    CHECK(trace.coarse_stable);
    CHECK(trace.steps.empty());
    CHECK(!trace.coarse_origin_visited);
    CHECK(!trace.block0_odometer_nonzero);
}

TEST_CASE("coupling runs keep their invariants and the origin implication") {
    const BlockSpec spec = simple_spec(4, 8, 0.25);
    const ModelParams params{1.0, 0.5};
    std::uint64_t finished = 0, origin_clear = 0;
    for (std::uint64_t t = 0; t < 120; ++t) {
        CouplingTrace trace;
        REQUIRE_NOTHROW(trace = run_coupling(spec, params, derive_seed(2718, t)));
        if (trace.aborted) continue;
        ++finished;
        CHECK(trace.coarse_stable == !trace.coarse_origin_visited);
        if (!trace.coarse_origin_visited) {
            ++origin_clear;
            CHECK(!trace.block0_odometer_nonzero);
            CHECK(trace.max_coarse_jumps_excess == 0);
        }
        CHECK(trace.wrong_direction == 0);
    }
    CHECK(finished > 100);
    CHECK(origin_clear > 0);
}

TEST_CASE("coupling step records tally with trace counters") {
    const BlockSpec spec = simple_spec(3, 6, 0.4);
    for (std::uint64_t t = 0; t < 25; ++t) {
        const CouplingTrace trace =
            run_coupling(spec, ModelParams{1.0, 0.5}, derive_seed(33, t));
        std::uint64_t writes = 0, fresh = 0;
        for (const StepRecord& s : trace.steps) {
            if (s.wrote) ++writes;
            if (s.kase == StepCase::Multiplicity) fresh += s.tau_prime_reads;
            CHECK(s.k != 0);  // the origin block is never toppled
        }
        CHECK(writes == trace.sleeps_written + trace.jumps_written);
        CHECK(fresh == trace.fresh_sleeps + trace.fresh_jumps);
    }
}

TEST_CASE("tau prime marginal statistics aggregate written instructions") {
    CouplingTrace a, b;
    a.sleeps_written = 3;
    a.jumps_written = 1;
    b.sleeps_written = 1;
    b.jumps_written = 3;
    const TauPrimeReport rep = tau_prime_marginal_stats({a, b}, 0.5);
    CHECK(rep.consumed == 8);
    CHECK(rep.sleeps == 4);
    CHECK(rep.sleep_freq == doctest::Approx(0.5));
    CHECK(rep.within_ci);
    const TauPrimeReport far = tau_prime_marginal_stats({a, b}, 0.999);
    CHECK(!far.within_ci);
    CHECK_THROWS_AS(tau_prime_marginal_stats({}, 0.5), EmptySample);
}

TEST_CASE("random offset sample translates the configuration") {
    const BlockSpec spec = simple_spec(4, 3, 1.0);
    auto [fine, coarse] = build_block_config(spec, 7);
    const Config shifted = random_offset_sample(fine, spec.n, 99);
    const int offset = shifted.window().lo - fine.window().lo;
    CHECK(offset >= 0);
    CHECK(offset < spec.n);
    for (int x = fine.window().lo; x <= fine.window().hi; ++x)
        CHECK(shifted.at(x + offset) == fine.at(x));

    // Offsets are uniform over {0, ..., n-1}.
    std::map<int, std::uint64_t> histo;
    for (std::uint64_t s = 0; s < 4000; ++s) {
        const Config sh = random_offset_sample(fine, spec.n, s);
        ++histo[sh.window().lo - fine.window().lo];
    }
    REQUIRE(histo.size() == 4);
    std::vector<std::uint64_t> counts;
    for (auto& [off, c] : histo) counts.push_back(c);
    CHECK(chi_square_stat(counts, {0.25, 0.25, 0.25, 0.25}) <
          chi_square_critical_1e3(3));
}

TEST_CASE("trace jsonl emits one record per step plus a summary") {
    const BlockSpec spec = simple_spec(3, 5, 0.5);
    const CouplingTrace trace = run_coupling(spec, ModelParams{1.0, 0.5}, 4);
    std::ostringstream out;
    write_trace_jsonl(trace, out);
    std::istringstream in(out.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        CHECK(line.front() == '{');
        CHECK(line.back() == '}');
        ++lines;
    }
    CHECK(lines == trace.steps.size() + 1);
}
