#include "arw/stats.hpp"

#include <algorithm>

namespace arw {

DominanceVerdict dominance_test(std::vector<double> samples_a,
                                std::vector<double> samples_b, double delta) {
    if (samples_a.empty() || samples_b.empty())
        throw EmptySample("dominance_test: empty sample");
    std::sort(samples_a.begin(), samples_a.end());
    std::sort(samples_b.begin(), samples_b.end());

    const double na = static_cast<double>(samples_a.size());
    const double nb = static_cast<double>(samples_b.size());

    // Evaluate F_A - F_B at every sample point of either set.
    std::vector<double> points = samples_a;
    points.insert(points.end(), samples_b.begin(), samples_b.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    double stat = -std::numeric_limits<double>::infinity();
    for (double x : points) {
        const double fa = static_cast<double>(std::upper_bound(samples_a.begin(),
                                                               samples_a.end(), x) -
                                              samples_a.begin()) / na;
        const double fb = static_cast<double>(std::upper_bound(samples_b.begin(),
                                                               samples_b.end(), x) -
                                              samples_b.begin()) / nb;
        stat = std::max(stat, fa - fb);
    }

    DominanceVerdict v;
    v.one_sided_stat = std::max(stat, 0.0);
    v.threshold = dkw_epsilon(delta, samples_a.size()) +
                  dkw_epsilon(delta, samples_b.size());
    v.pass = v.one_sided_stat <= v.threshold;
    return v;
}

} // namespace arw
