#ifndef ARW_INSTRUCTIONS_HPP
#define ARW_INSTRUCTIONS_HPP

#include <cstdint>
#include <map>
#include <utility>

#include "arw/rng.hpp"
#include "arw/site_map.hpp"
#include "arw/types.hpp"

namespace arw {

// Replayable per-site instruction stacks. The value at (site, index) is a
// pure function of (seed, site, index), so stacks never need to be stored
// and reads in any order see the same array. Jump-only sites carry no
// sleep instructions. Overrides may only be installed above the consumed
// prefix and are frozen once read.
class InstructionArray {
public:
    static constexpr std::uint64_t kDefaultDepthCap = 10'000'000;

    InstructionArray(ModelParams params, std::uint64_t seed,
                     std::uint64_t depth_cap = kDefaultDepthCap)
        : params_(params), seed_(seed), depth_cap_(depth_cap) {
        params_.validate();
        const double denom = 1.0 + params_.lambda;
        sleep_threshold_ = params_.lambda / denom;
        right_threshold_ = sleep_threshold_ + params_.p_right / denom;
    }

    const ModelParams& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t depth_cap() const noexcept { return depth_cap_; }

    std::uint64_t used(int site) const { return used_.get(site); }
    const Odometer& odometer() const noexcept { return used_; }

    void set_jump_only(Interval zone) {
        for (int x = zone.lo; x <= zone.hi; ++x) jump_only_.at(x) = 1;
    }
    bool jump_only(int site) const { return jump_only_.get(site) != 0; }

    // index is 1-based.
    Instruction peek(int site, std::uint64_t index) const {
        if (index == 0) throw Error("instruction index must be >= 1");
        if (index > depth_cap_) throw StackDepthExceeded(site, depth_cap_);
        if (!overrides_.empty()) {
            auto it = overrides_.find({site, index});
            if (it != overrides_.end()) return it->second;
        }
        return sample(site, index);
    }

    // Only indices strictly above the consumed prefix may be overridden,
    // so an already-used instruction can never be rewritten.
    void override_at(int site, std::uint64_t index, Instruction instr) {
        if (index <= used_.get(site))
            throw Error("cannot override a consumed instruction");
        overrides_[{site, index}] = instr;
    }

    // Reads the next unused instruction at site and advances the odometer.
    Instruction consume(int site) {
        std::uint64_t& u = used_.at(site);
        if (u + 1 > depth_cap_) throw StackDepthExceeded(site, depth_cap_);
        Instruction instr;
        if (!overrides_.empty()) {
            auto it = overrides_.find({site, u + 1});
            instr = (it != overrides_.end()) ? it->second : sample(site, u + 1);
        } else {
            instr = sample(site, u + 1);
        }
        ++u;
        return instr;
    }

private:
    Instruction sample(int site, std::uint64_t index) const noexcept {
        const double u = to_unit(mix3(seed_, site, index));
        if (jump_only_.get(site))
            return u < params_.p_right ? Instruction::JumpRight : Instruction::JumpLeft;
        if (u < sleep_threshold_) return Instruction::Sleep;
        return u < right_threshold_ ? Instruction::JumpRight : Instruction::JumpLeft;
    }

    ModelParams params_;
    std::uint64_t seed_;
    std::uint64_t depth_cap_;
    double sleep_threshold_;
    double right_threshold_;
    Odometer used_;
    SiteMap<std::uint8_t> jump_only_;
    std::map<std::pair<int, std::uint64_t>, Instruction> overrides_;
};

} // namespace arw

#endif
