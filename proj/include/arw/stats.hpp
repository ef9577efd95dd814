#ifndef ARW_STATS_HPP
#define ARW_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "arw/types.hpp"

namespace arw {

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
    double estimate = 0.0;
};

// Wilson score interval for a binomial proportion; z defaults to the
// 99% two-sided normal quantile.
inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                      double z = 2.5758293035489004) {
    if (trials == 0) throw EmptySample("wilson_interval: no trials");
    const double n = static_cast<double>(trials);
    const double phat = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = phat + z2 / (2.0 * n);
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, (centre - half) / denom),
            std::min(1.0, (centre + half) / denom), phat};
}

// Dvoretzky-Kiefer-Wolfowitz band half-width at confidence 1 - delta.
inline double dkw_epsilon(double delta, std::uint64_t n) {
    if (n == 0) throw EmptySample("dkw_epsilon: empty sample");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::uint64_t n = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
    if (xs.empty()) throw EmptySample("mean_se: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double m = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double var = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
    return {m, std::sqrt(var / static_cast<double>(xs.size())), xs.size()};
}

// Pearson chi-square statistic for observed counts against expected
// probabilities (expected counts = p_i * total).
inline double chi_square_stat(const std::vector<std::uint64_t>& observed,
                              const std::vector<double>& probs) {
    if (observed.size() != probs.size() || observed.empty())
        throw Error("chi_square_stat: size mismatch");
    std::uint64_t total = 0;
    for (auto c : observed) total += c;
    if (total == 0) throw EmptySample("chi_square_stat: no observations");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double expect = probs[i] * static_cast<double>(total);
        if (expect <= 0.0) {
            if (observed[i] > 0) return std::numeric_limits<double>::infinity();
            continue;
        }
        const double diff = static_cast<double>(observed[i]) - expect;
        stat += diff * diff / expect;
    }
    return stat;
}

// Chi-square upper quantiles at significance 1e-3.
inline double chi_square_critical_1e3(int dof) {
    switch (dof) {
        case 1: return 10.827566170662733;
        case 2: return 13.815510557964274;
        case 3: return 16.266236196238129;
        default: throw Error("chi_square_critical_1e3: unsupported dof");
    }
}

// Two-proportion z statistic (pooled).
inline double two_proportion_z(std::uint64_t k1, std::uint64_t n1,
                               std::uint64_t k2, std::uint64_t n2) {
    if (n1 == 0 || n2 == 0) throw EmptySample("two_proportion_z: empty sample");
    const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
    const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
    const double pool = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
    const double se = std::sqrt(pool * (1.0 - pool) *
                                (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
    if (se == 0.0) return 0.0;
    return (p1 - p2) / se;
}

// P(G_1 + ... + G_k <= ell) for i.i.d. geometric variables on {0,1,...}
// with success probability s (negative binomial lower tail).
inline double nb_success(std::uint64_t k, int ell, double s) {
    if (!(s > 0.0 && s <= 1.0)) throw Error("nb_success: s must be in (0,1]");
    if (k == 0) return 1.0;
    if (ell < 0) return 0.0;
    // pmf(m) = C(m+k-1, k-1) s^k (1-s)^m, accumulated by recurrence.
    double pmf = std::pow(s, static_cast<double>(k));
    double cdf = pmf;
    const double q = 1.0 - s;
    for (int m = 1; m <= ell; ++m) {
        pmf *= q * (static_cast<double>(m + static_cast<int>(k)) - 1.0) / static_cast<double>(m);
        cdf += pmf;
    }
    return std::min(cdf, 1.0);
}

struct DominanceVerdict {
    double one_sided_stat = 0.0;  // max_x (F_A(x) - F_B(x))
    double threshold = 0.0;       // DKW(delta, N_A) + DKW(delta, N_B)
    bool pass = false;            // A claimed to stochastically dominate B
};

// One-sided empirical-CDF comparison: A dominates B iff F_A never exceeds
// F_B by more than the combined DKW band.
DominanceVerdict dominance_test(std::vector<double> samples_a,
                                std::vector<double> samples_b, double delta);

} // namespace arw

#endif
