#ifndef ARW_COUPLING_HPP
#define ARW_COUPLING_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "arw/instructions.hpp"
#include "arw/site_map.hpp"
#include "arw/types.hpp"

namespace arw {

constexpr std::uint64_t kMarchBudget = 10'000'000;

struct MarchBudgetExhausted : Error {
    MarchBudgetExhausted() : Error("forced march exhausted its toppling budget") {}
};

struct BlockWindowOverflow : Error {
    explicit BlockWindowOverflow(int site)
        : Error("marching walk left the simulated window at site " +
                std::to_string(site)) {}
};

// Block layout: blocks B_k = V_n + k*n for |k| <= K, each starting with a
// copy of eta with probability q, independently.
struct BlockSpec {
    int n = 1;
    std::vector<std::uint32_t> eta;  // active counts on segment(n)
    int K = 10;
    double q = 0.5;

    void validate() const;
    std::uint64_t eta_mass() const;
    Interval block(int k) const;  // B_k
};

// One site per block: empty, one sleeping token, or an active count.
struct CoarseConfig {
    int K = 0;
    std::vector<SiteContent> cells;

    CoarseConfig() = default;
    explicit CoarseConfig(int half_width)
        : K(half_width), cells(static_cast<std::size_t>(2 * half_width + 1)) {}

    SiteContent& at(int k) {
        if (k < -K || k > K) throw WindowOverflow(k);
        return cells[static_cast<std::size_t>(k + K)];
    }
    const SiteContent& at(int k) const {
        if (k < -K || k > K) throw WindowOverflow(k);
        return cells[static_cast<std::size_t>(k + K)];
    }
    bool stable() const {
        for (const auto& c : cells)
            if (c.is_active()) return false;
        return true;
    }
};

enum class StepCase : std::uint8_t { Good, Bad, Multiplicity };
const char* name(StepCase c) noexcept;

struct StepRecord {
    std::uint64_t j = 0;  // step counter
    int k = 0;            // block toppled
    StepCase kase = StepCase::Good;
    Instruction tau_prime_write = Instruction::Sleep;  // good/bad cases
    bool wrote = false;          // false in the multiplicity case
    std::uint64_t tau_prime_reads = 0;  // coarse instructions consumed
    std::uint32_t marched = 0;          // particles walked to the next block
};

struct CouplingTrace {
    std::vector<StepRecord> steps;
    bool coarse_origin_visited = false;
    bool block0_odometer_nonzero = false;
    bool aborted = false;
    std::string aborted_reason;
    bool coarse_stable = false;

    std::uint64_t sleeps_written = 0;  // tau' writes at xi'(k) = 1 steps
    std::uint64_t jumps_written = 0;
    std::uint64_t fresh_sleeps = 0;  // tau' reads at multiplicity steps
    std::uint64_t fresh_jumps = 0;
    std::uint64_t wrong_direction = 0;  // non-sleep reads not toward origin
    std::uint64_t fine_topplings = 0;
    std::uint64_t max_coarse_jumps_excess = 0;  // jumps at k beyond |k|-1
};

// xi = phi_eta(xi'): block B_k holds a translated copy of eta iff the
// Bernoulli(q) coarse value xi'(k) is 1.
std::pair<Config, CoarseConfig> build_block_config(const BlockSpec& spec,
                                                   std::uint64_t seed);

// Walks particles one at a time from sources to destinations (matched
// outermost-first) by acceptable topplings of the walked particle's
// current site, sleeps consumed as no-ops. positive_side selects which
// side of the origin the march lives on; no site below (resp. above)
// inner_limit is ever toppled. Returns the number of topplings.
std::uint64_t forced_march(Config& xi, InstructionArray& tau,
                           std::vector<int> sources, std::vector<int> destinations,
                           int inner_limit, bool positive_side,
                           std::uint64_t budget = kMarchBudget);

// Runs the block/coarse coupled stabilization until the coarse window is
// stable, the coarse origin is occupied, or a budget or window abort.
// Invariants of the construction are asserted after every step; failures
// throw. The good-stabilization probability p is never an input: fresh
// coarse instructions are realized by independent block stabilizations.
CouplingTrace run_coupling(const BlockSpec& spec, const ModelParams& params,
                           std::uint64_t seed, std::uint64_t step_budget = 100'000,
                           std::uint64_t topple_budget = kMarchBudget);

struct TauPrimeReport {
    std::uint64_t consumed = 0;  // written instructions at xi'(k) = 1 steps
    std::uint64_t sleeps = 0;
    double sleep_freq = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
    double p_hat = 0.0;
    bool within_ci = false;
    std::uint64_t wrong_direction = 0;
};

// Compares the empirical sleep frequency of the coarse instructions
// consumed at single-copy steps against an independently estimated p.
TauPrimeReport tau_prime_marginal_stats(const std::vector<CouplingTrace>& traces,
                                        double p_hat);

// Translates a block configuration by an offset drawn uniformly on B_0.
Config random_offset_sample(const Config& xi, int n, std::uint64_t seed);

// One JSON object per step, then one summary line.
void write_trace_jsonl(const CouplingTrace& trace, std::ostream& out);

} // namespace arw

#endif
