#include "doctest.h"

#include <algorithm>
#include <vector>

#include "arw/instructions.hpp"
#include "arw/rng.hpp"
#include "arw/site_map.hpp"
#include "arw/stats.hpp"
#include "arw/topple.hpp"
#include "arw/types.hpp"

using namespace arw;

TEST_CASE("segment endpoints") {
    CHECK(segment(0).empty());
    CHECK(segment(1).lo == 0);
    CHECK(segment(1).hi == 0);
    CHECK(segment(2).lo == 0);
    CHECK(segment(2).hi == 1);
    CHECK(segment(5).lo == -2);
    CHECK(segment(5).hi == 2);
    CHECK(segment(100).length() == 100);
    CHECK(segment(101).length() == 101);
    CHECK_THROWS_AS(segment(-1), Error);
}

TEST_CASE("interval basics") {
    Interval v{-3, 4};
    CHECK(v.contains(-3));
    CHECK(v.contains(4));
    CHECK(!v.contains(5));
    CHECK(v.length() == 8);
    CHECK(v.covers(Interval{0, 2}));
    CHECK(!v.covers(Interval{0, 5}));
    CHECK(v.covers(Interval{}));
}

TEST_CASE("to_unit stays in [0,1)") {
    CHECK(to_unit(0) == 0.0);
    CHECK(to_unit(~0ull) < 1.0);
    CHECK(to_unit(~0ull) > 0.999999);
}

TEST_CASE("derive_seed separates streams") {
    const std::uint64_t master = 42;
    std::vector<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 64; ++s) seen.push_back(derive_seed(master, s));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("small rng below is in range and roughly uniform") {
    SmallRng rng(7);
    std::vector<std::uint64_t> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const std::uint64_t r = rng.below(7);
        REQUIRE(r < 7);
        ++counts[r];
    }
    for (auto c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("site map grows in both directions and keeps values") {
    SiteMap<int> m;
    m.at(0) = 1;
    m.at(100) = 2;
    m.at(-100) = 3;
    CHECK(m.get(0) == 1);
    CHECK(m.get(100) == 2);
    CHECK(m.get(-100) == 3);
    CHECK(m.get(50) == 0);
    CHECK(m.get(12345) == 0);
    std::vector<int> sites;
    m.for_each([&](int x, int) { sites.push_back(x); });
    CHECK(sites == std::vector<int>{-100, 0, 100});

    SiteMap<int> other;
    other.at(-100) = 3;
    other.at(100) = 2;
    other.at(0) = 1;
    CHECK(m == other);
    other.at(7) = 9;
    CHECK(!(m == other));
}

TEST_CASE("instruction reads are pure in (seed, site, index)") {
    const ModelParams params{1.0, 0.5};
    InstructionArray a(params, 99);
    InstructionArray b(params, 99);

    // Consume in opposite orders; the instruction at (site, index) agrees.
    std::vector<Instruction> seen_a, seen_b;
    for (int x = -5; x <= 5; ++x)
        for (int i = 0; i < 4; ++i) seen_a.push_back(a.consume(x));
    for (int x = 5; x >= -5; --x)
        for (int i = 0; i < 4; ++i) seen_b.push_back(b.consume(x));
    for (int xi = 0; xi < 11; ++xi)
        for (int i = 0; i < 4; ++i)
            CHECK(seen_a[static_cast<std::size_t>(xi * 4 + i)] ==
                  seen_b[static_cast<std::size_t>((10 - xi) * 4 + i)]);

    // peek never disturbs consume.
    InstructionArray c(params, 99);
    for (int i = 1; i <= 4; ++i) (void)c.peek(0, static_cast<std::uint64_t>(i));
    CHECK(c.used(0) == 0);
    CHECK(c.consume(0) == a.peek(0, 1));
}

TEST_CASE("different seeds give different stacks somewhere") {
    const ModelParams params{1.0, 0.5};
    InstructionArray a(params, 1), b(params, 2);
    bool differ = false;
    for (int x = -20; x <= 20 && !differ; ++x)
        for (std::uint64_t i = 1; i <= 20 && !differ; ++i)
            if (a.peek(x, i) != b.peek(x, i)) differ = true;
    CHECK(differ);
}

TEST_CASE("jump-only sites never sleep") {
    const ModelParams params{5.0, 0.3};  // sleep-heavy marginal
    InstructionArray arr(params, 3);
    arr.set_jump_only(Interval{-10, -1});
    for (int x = -10; x <= -1; ++x)
        for (std::uint64_t i = 1; i <= 200; ++i)
            CHECK(arr.peek(x, i) != Instruction::Sleep);
    bool saw_sleep = false;
    for (std::uint64_t i = 1; i <= 200; ++i)
        if (arr.peek(0, i) == Instruction::Sleep) saw_sleep = true;
    CHECK(saw_sleep);
}

TEST_CASE("instruction marginal matches (lambda, p) at 1e-3") {
    const ModelParams params{2.0, 0.3};
    InstructionArray arr(params, 2024);
    std::vector<std::uint64_t> counts(3, 0);
    for (int x = -500; x <= 499; ++x)
        for (std::uint64_t i = 1; i <= 1000; ++i)
            ++counts[static_cast<std::size_t>(arr.peek(x, i))];
    const double denom = 1.0 + params.lambda;
    const std::vector<double> probs{params.lambda / denom,
                                    (1.0 - params.p_right) / denom,
                                    params.p_right / denom};
    CHECK(chi_square_stat(counts, probs) < chi_square_critical_1e3(2));
}

TEST_CASE("jump-only marginal matches p at 1e-3") {
    const ModelParams params{1.0, 0.25};
    InstructionArray arr(params, 11);
    arr.set_jump_only(Interval{0, 99});
    std::vector<std::uint64_t> counts(2, 0);  // left, right
    for (int x = 0; x < 100; ++x)
        for (std::uint64_t i = 1; i <= 2000; ++i)
            ++counts[arr.peek(x, i) == Instruction::JumpRight ? 1u : 0u];
    CHECK(chi_square_stat(counts, {0.75, 0.25}) < chi_square_critical_1e3(1));
}

TEST_CASE("overrides shadow the sampled value but not consumed reads") {
    const ModelParams params{1.0, 0.5};
    InstructionArray arr(params, 5);
    arr.override_at(3, 1, Instruction::JumpLeft);
    CHECK(arr.peek(3, 1) == Instruction::JumpLeft);
    CHECK(arr.consume(3) == Instruction::JumpLeft);
    CHECK_THROWS_AS(arr.override_at(3, 1, Instruction::Sleep), Error);
    arr.override_at(3, 2, Instruction::Sleep);
    CHECK(arr.consume(3) == Instruction::Sleep);
}

TEST_CASE("depth cap throws") {
    const ModelParams params{1.0, 0.5};
    InstructionArray arr(params, 5, 3);
    for (int i = 0; i < 3; ++i) (void)arr.consume(0);
    CHECK_THROWS_AS(arr.consume(0), StackDepthExceeded);
    CHECK_THROWS_AS(arr.peek(0, 4), StackDepthExceeded);
}

namespace {

InstructionArray forced_array(std::vector<Instruction> at_zero) {
    InstructionArray arr(ModelParams{1.0, 0.5}, 0);
    for (std::size_t i = 0; i < at_zero.size(); ++i)
        arr.override_at(0, i + 1, at_zero[i]);
    return arr;
}

} // namespace

TEST_CASE("topple applies sleep, jumps, kills and wake-ups") {
    const Interval kill{-1, 1};

    SUBCASE("lone particle sleeps") {
        Config cfg(Interval{-2, 2});
        cfg.add_active(0);
        auto arr = forced_array({Instruction::Sleep});
        const ToppleEvent ev = topple(cfg, arr, 0, ToppleMode::Legal, kill);
        CHECK(ev.slept);
        CHECK(!ev.moved);
        CHECK(cfg.at(0).is_sleeping());
        CHECK(cfg.killed == 0);
    }

    SUBCASE("sleep on a crowded site is a no-op") {
        Config cfg(Interval{-2, 2});
        cfg.add_active(0, 2);
        auto arr = forced_array({Instruction::Sleep});
        const ToppleEvent ev = topple(cfg, arr, 0, ToppleMode::Legal, kill);
        CHECK(!ev.slept);
        CHECK(cfg.at(0) == SiteContent::active(2));
    }

    SUBCASE("jump moves a particle and can wake the destination") {
        Config cfg(Interval{-2, 2});
        cfg.add_active(0);
        cfg.at(1) = SiteContent::sleeping();
        auto arr = forced_array({Instruction::JumpRight});
        const ToppleEvent ev = topple(cfg, arr, 0, ToppleMode::Legal, kill);
        CHECK(ev.moved);
        CHECK(ev.destination == 1);
        CHECK(ev.woke_destination);
        CHECK(cfg.at(0).is_empty());
        CHECK(cfg.at(1) == SiteContent::active(2));
    }

    SUBCASE("jump out of the kill region removes the particle") {
        Config cfg(Interval{-2, 2});
        cfg.add_active(1);
        auto arr = forced_array({});
        arr.override_at(1, 1, Instruction::JumpRight);
        const ToppleEvent ev = topple(cfg, arr, 1, ToppleMode::Legal, kill);
        CHECK(ev.killed);
        CHECK(cfg.killed == 1);
        CHECK(cfg.at(1).is_empty());
        CHECK(cfg.at(2).is_empty());
    }

    SUBCASE("acceptable toppling wakes a sleeper, legal refuses") {
        Config cfg(Interval{-2, 2});
        cfg.at(0) = SiteContent::sleeping();
        auto arr = forced_array({Instruction::JumpLeft});
        CHECK_THROWS_AS(topple(cfg, arr, 0, ToppleMode::Legal, kill),
                        ToppleSleepingWhenLegal);
        const ToppleEvent ev = topple(cfg, arr, 0, ToppleMode::Acceptable, kill);
        CHECK(ev.moved);
        CHECK(cfg.at(-1) == SiteContent::active(1));
    }

    SUBCASE("toppling an empty site throws") {
        Config cfg(Interval{-2, 2});
        auto arr = forced_array({});
        CHECK_THROWS_AS(topple(cfg, arr, 0, ToppleMode::Legal, kill), ToppleOnEmpty);
    }
}

TEST_CASE("topplings conserve particles plus kills") {
    SmallRng rng(314);
    for (int rep = 0; rep < 50; ++rep) {
        const Interval window{-8, 8};
        Config cfg(window);
        for (int x = -4; x <= 4; ++x)
            if (rng.uniform() < 0.6)
                cfg.add_active(x, static_cast<std::uint32_t>(1 + rng.below(3)));
        const std::uint64_t total = cfg.total_particles();
        InstructionArray arr(ModelParams{0.5, 0.6}, derive_seed(777, rep));
        const Interval kill{-6, 6};
        for (int step = 0; step < 200; ++step) {
            std::vector<int> active;
            for (int x = kill.lo; x <= kill.hi; ++x)
                if (cfg.at(x).is_active()) active.push_back(x);
            if (active.empty()) break;
            const int site =
                active[static_cast<std::size_t>(rng.below(active.size()))];
            topple(cfg, arr, site, ToppleMode::Legal, kill);
            CHECK(cfg.total_particles() + cfg.killed == total);
        }
    }
}

TEST_CASE("apply_sequence counts and reports failures") {
    Config cfg(Interval{-2, 2});
    cfg.add_active(0, 2);
    InstructionArray arr(ModelParams{1.0, 0.5}, 0);
    arr.override_at(0, 1, Instruction::JumpRight);
    arr.override_at(0, 2, Instruction::JumpRight);
    auto [out, counts] =
        apply_sequence(cfg, arr, {0, 0}, ToppleMode::Legal, Interval{-2, 2});
    CHECK(counts.get(0) == 2);
    CHECK(out.at(1) == SiteContent::active(2));

    InstructionArray arr2(ModelParams{1.0, 0.5}, 0);
    CHECK_THROWS_AS(apply_sequence(cfg, arr2, {0, 1, 1, 1, 1, 1, 1},
                                   ToppleMode::Legal, Interval{-2, 2}),
                    SequenceError);
}
