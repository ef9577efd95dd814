#ifndef ARW_STABILIZE_HPP
#define ARW_STABILIZE_HPP

#include <cstdint>
#include <vector>

#include "arw/instructions.hpp"
#include "arw/topple.hpp"
#include "arw/types.hpp"

namespace arw {

constexpr std::uint64_t kDefaultToppleBudget = 100'000'000;

enum class Strategy : std::uint8_t {
    LeftmostActive,
    RightmostActive,
    ClosestToOrigin,
    SeededRandomActive,
    QueueOrder,
};

const char* name(Strategy s) noexcept;

struct StabilizeRequest {
    Config initial;
    Interval target;                      // V: must end stable
    Interval kill;                        // W: leaving W kills
    std::vector<Interval> no_sleep_zone;  // jump-only strips in W \ V, must end empty
    Strategy strategy = Strategy::LeftmostActive;
    std::uint64_t budget = kDefaultToppleBudget;
    std::uint64_t strategy_seed = 0;  // only for SeededRandomActive

    void validate() const;
};

struct StabilizationReport {
    Config final;
    Odometer odometer;  // topplings of this run only
    std::uint64_t exits_total = 0;
    std::uint64_t exits_left = 0;
    std::uint64_t exits_right = 0;
    std::uint64_t topplings = 0;
    bool truncated = false;
};

// Repeatedly topples strategy-selected active sites until the target is
// stable and every no-sleep strip is empty, or the budget runs out.
StabilizationReport stabilize(const StabilizeRequest& request, InstructionArray& array);

// Builds a configuration on segment(n) from per-site active counts
// (counts[i] is the count at site segment(n).lo + i).
Config make_segment_config(int n, const std::vector<std::uint32_t>& counts);

// M_n: particles killed while stabilizing eta on V_n with W = V = V_n.
StabilizationReport exit_report(const Config& eta, int n, const ModelParams& params,
                                std::uint64_t seed,
                                std::uint64_t budget = kDefaultToppleBudget);
std::uint64_t exit_count(const Config& eta, int n, const ModelParams& params,
                         std::uint64_t seed,
                         std::uint64_t budget = kDefaultToppleBudget);

struct NmlReport {
    std::uint64_t exits = 0;  // particles that left W
    Odometer odometer;
    std::uint64_t topplings = 0;
    bool truncated = false;
};

// Stabilizes eta on V_n surrounded by jump-only strips filling W \ V_n,
// with the escorted extremal-active procedure: topple the extremal active
// particle of the inner region, and walk every particle that enters the
// outer strip with acceptable topplings (sleeps consumed as no-ops) until
// it leaves W. Returns the number of particles that left W.
NmlReport stabilize_with_nml(const Config& eta, int n, Interval w,
                             const ModelParams& params, std::uint64_t seed,
                             std::uint64_t budget = kDefaultToppleBudget);

struct TrapResult {
    bool success = false;
    std::uint64_t jumps_used = 0;
};

// Settles k particles one at a time into a fresh outward buffer of length
// ell. Particle j starts on the slot adjacent to the resting place of
// particle j-1, advances outward on jump instructions and rests on its
// first sleep. Succeeds iff everyone rests within the buffer.
TrapResult trap_in_buffer(std::uint64_t k, int ell, bool left_side,
                          const ModelParams& params, std::uint64_t seed);

struct SpreadResult {
    bool no_exit_enlarged = false;
    std::uint64_t m_prime = 0;  // particles leaving V_{n+2l} in step 1
    bool truncated = false;
};

// Two-step enlargement: stabilize V_{n+2l} with jump-only strips outside
// V_n, then trap the exited particles in the outer buffers of length l.
SpreadResult two_step_spread(const Config& eta, int n, int ell,
                             const ModelParams& params, std::uint64_t seed,
                             std::uint64_t budget = kDefaultToppleBudget);

} // namespace arw

#endif
