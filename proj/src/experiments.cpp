#include "arw/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "arw/parallel.hpp"
#include "arw/rng.hpp"

namespace arw {

namespace {

// Inverse-CDF draw of a Poisson(zeta) count from one uniform, so that the
// count is non-decreasing in zeta for a fixed uniform.
std::uint32_t poisson_icdf(double zeta, double u) {
    if (zeta <= 0.0) return 0;
    double pmf = std::exp(-zeta);
    double cdf = pmf;
    std::uint32_t k = 0;
    while (u >= cdf && k < 100'000'000) {
        ++k;
        pmf *= zeta / static_cast<double>(k);
        cdf += pmf;
        if (pmf == 0.0) break;
    }
    return k;
}

std::uint32_t bernoulli_like_icdf(double zeta, double u) {
    const double base = std::floor(zeta);
    const double frac = zeta - base;
    return static_cast<std::uint32_t>(base) + (u < frac ? 1 : 0);
}

constexpr std::int64_t kTruncated = -1;

} // namespace

InitialSpec InitialSpec::deterministic(std::vector<std::uint32_t> counts) {
    InitialSpec s;
    s.kind = InitialKind::Deterministic;
    s.counts = std::move(counts);
    return s;
}

InitialSpec InitialSpec::flat(double zeta, int n) {
    if (n < 1) throw Error("flat initial spec needs n >= 1");
    if (!(zeta >= 0.0)) throw Error("flat initial spec needs zeta >= 0");
    const std::uint64_t mass =
        static_cast<std::uint64_t>(std::ceil(zeta * static_cast<double>(n)));
    std::vector<std::uint32_t> counts(static_cast<std::size_t>(n),
                                      static_cast<std::uint32_t>(mass / n));
    for (std::uint64_t i = 0; i < mass % static_cast<std::uint64_t>(n); ++i)
        ++counts[static_cast<std::size_t>(i)];
    return deterministic(std::move(counts));
}

InitialSpec InitialSpec::poisson(double zeta) {
    if (!(zeta >= 0.0)) throw Error("poisson initial spec needs zeta >= 0");
    InitialSpec s;
    s.kind = InitialKind::IIDPoisson;
    s.zeta = zeta;
    return s;
}

InitialSpec InitialSpec::bernoulli_like(double zeta) {
    if (!(zeta >= 0.0)) throw Error("bernoulli initial spec needs zeta >= 0");
    InitialSpec s;
    s.kind = InitialKind::IIDBernoulliLike;
    s.zeta = zeta;
    return s;
}

InitialSpec InitialSpec::point_mass(double zeta) {
    if (!(zeta >= 0.0)) throw Error("point mass initial spec needs zeta >= 0");
    InitialSpec s;
    s.kind = InitialKind::PointMass;
    s.zeta = zeta;
    return s;
}

Config InitialSpec::realize(int n, std::uint64_t seed) const {
    const Interval v = segment(n);
    Config cfg(v);
    switch (kind) {
        case InitialKind::Deterministic: {
            if (static_cast<int>(counts.size()) != n)
                throw Error("deterministic initial spec has the wrong length");
            for (int i = 0; i < n; ++i)
                if (counts[static_cast<std::size_t>(i)] > 0)
                    cfg.at(v.lo + i) =
                        SiteContent::active(counts[static_cast<std::size_t>(i)]);
            break;
        }
        case InitialKind::IIDPoisson:
        case InitialKind::IIDBernoulliLike: {
            for (int x = v.lo; x <= v.hi; ++x) {
                const double u = to_unit(mix3(seed, x, 1));
                const std::uint32_t c = kind == InitialKind::IIDPoisson
                                            ? poisson_icdf(zeta, u)
                                            : bernoulli_like_icdf(zeta, u);
                if (c > 0) cfg.at(x) = SiteContent::active(c);
            }
            break;
        }
        case InitialKind::PointMass: {
            const std::uint64_t mass = static_cast<std::uint64_t>(
                std::ceil(zeta * static_cast<double>(n)));
            if (mass > 0)
                cfg.at(0) = SiteContent::active(static_cast<std::uint32_t>(mass));
            break;
        }
    }
    return cfg;
}

double InitialSpec::mean_density(int n) const {
    switch (kind) {
        case InitialKind::Deterministic: {
            std::uint64_t mass = 0;
            for (auto c : counts) mass += c;
            return static_cast<double>(mass) / static_cast<double>(n);
        }
        case InitialKind::IIDPoisson:
        case InitialKind::IIDBernoulliLike:
            return zeta;
        case InitialKind::PointMass:
            return std::ceil(zeta * static_cast<double>(n)) / static_cast<double>(n);
    }
    return 0.0;
}

std::string InitialSpec::describe() const {
    switch (kind) {
        case InitialKind::Deterministic: return "deterministic";
        case InitialKind::IIDPoisson: return "poisson";
        case InitialKind::IIDBernoulliLike: return "bernoulli";
        case InitialKind::PointMass: return "point";
    }
    return "?";
}

void TrialPlan::validate() const {
    params.validate();
    if (n < 1) throw Error("trial plan: n must be >= 1");
    if (trials < 1) throw Error("trial plan: trials must be >= 1");
    if (!(epsilon >= 0.0)) throw Error("trial plan: epsilon must be >= 0");
}

namespace {

std::vector<std::int64_t> run_trials(const TrialPlan& plan) {
    plan.validate();
    std::vector<std::int64_t> results(plan.trials, kTruncated);
    for_each_trial(plan.trials, plan.threads, [&](std::uint64_t t) {
        const std::uint64_t trial_seed = derive_seed(plan.master_seed, t);
        const Config initial =
            plan.initial.realize(plan.n, derive_seed(trial_seed, 0));
        const StabilizationReport rep = exit_report(
            initial, plan.n, plan.params, derive_seed(trial_seed, 1), plan.budget);
        if (!rep.truncated)
            results[t] = static_cast<std::int64_t>(rep.exits_total);
    });
    return results;
}

} // namespace

EmpiricalSummary run_exit_stats(const TrialPlan& plan) {
    const std::vector<std::int64_t> results = run_trials(plan);
    EmpiricalSummary sum;
    std::vector<double> fractions;
    std::uint64_t zeros = 0, tails = 0;
    const double tail_cut = plan.epsilon * static_cast<double>(plan.n);
    for (std::int64_t r : results) {
        if (r == kTruncated) {
            ++sum.excluded_truncated;
            continue;
        }
        const std::uint64_t m = static_cast<std::uint64_t>(r);
        ++sum.histogram[m];
        fractions.push_back(static_cast<double>(m) / static_cast<double>(plan.n));
        if (m == 0) ++zeros;
        if (static_cast<double>(m) > tail_cut) ++tails;
    }
    if (fractions.empty()) throw AllTrialsTruncated();
    sum.trials = fractions.size();
    const MeanSe ms = mean_se(fractions);
    sum.mean_mn_over_n = ms.mean;
    sum.se = ms.se;
    const WilsonInterval wz = wilson_interval(zeros, sum.trials);
    sum.p_zero = wz.estimate;
    sum.p_zero_lo = wz.lo;
    sum.p_zero_hi = wz.hi;
    const WilsonInterval wt = wilson_interval(tails, sum.trials);
    sum.p_tail = wt.estimate;
    sum.p_tail_lo = wt.lo;
    sum.p_tail_hi = wt.hi;
    return sum;
}

ExitSamples collect_exit_samples(const TrialPlan& plan) {
    const std::vector<std::int64_t> results = run_trials(plan);
    ExitSamples out;
    for (std::int64_t r : results) {
        if (r == kTruncated) ++out.excluded_truncated;
        else out.m.push_back(static_cast<std::uint64_t>(r));
    }
    if (out.m.empty()) throw AllTrialsTruncated();
    return out;
}

ScanTable hockey_stick_scan(const ModelParams& params,
                            const std::vector<double>& zeta_grid,
                            const std::vector<int>& n_list, std::uint64_t trials,
                            std::uint64_t seed, int threads,
                            std::uint64_t budget) {
    params.validate();
    if (zeta_grid.empty() || n_list.empty())
        throw Error("hockey stick scan: empty grid");
    if (trials < 1) throw Error("hockey stick scan: trials must be >= 1");

    std::vector<double> zetas_sorted = zeta_grid;
    std::sort(zetas_sorted.begin(), zetas_sorted.end());

    ScanTable table;
    for (int n : n_list) {
        const std::size_t nz = zetas_sorted.size();
        // results[t*nz + z] = M for trial t at zetas_sorted[z], -1 truncated
        std::vector<std::int64_t> results(trials * nz, kTruncated);
        const std::uint64_t n_seed =
            derive_seed(seed, static_cast<std::uint64_t>(n));
        for_each_trial(trials, threads, [&](std::uint64_t t) {
            const std::uint64_t trial_seed = derive_seed(n_seed, t);
            const std::uint64_t cfg_seed = derive_seed(trial_seed, 0);
            const std::uint64_t arr_seed = derive_seed(trial_seed, 1);
            for (std::size_t z = 0; z < nz; ++z) {
                // One uniform field and one array per trial: nested initial
                // configurations share the instructions across densities.
                const Config initial =
                    InitialSpec::poisson(zetas_sorted[z]).realize(n, cfg_seed);
                const StabilizationReport rep =
                    exit_report(initial, n, params, arr_seed, budget);
                if (!rep.truncated)
                    results[t * nz + z] =
                        static_cast<std::int64_t>(rep.exits_total);
            }
        });
        for (std::size_t z = 0; z < nz; ++z) {
            std::vector<double> fractions;
            std::uint64_t excluded = 0;
            for (std::uint64_t t = 0; t < trials; ++t) {
                const std::int64_t r = results[t * nz + z];
                if (r == kTruncated) ++excluded;
                else
                    fractions.push_back(static_cast<double>(r) /
                                        static_cast<double>(n));
            }
            ScanCell cell;
            cell.zeta = zetas_sorted[z];
            cell.n = n;
            cell.excluded = excluded;
            if (!fractions.empty()) {
                const MeanSe ms = mean_se(fractions);
                cell.mean = ms.mean;
                cell.se = ms.se;
            }
            table.cells.push_back(cell);
        }
        for (std::uint64_t t = 0; t < trials; ++t)
            for (std::size_t z = 0; z + 1 < nz; ++z) {
                const std::int64_t a = results[t * nz + z];
                const std::int64_t b = results[t * nz + z + 1];
                if (a != kTruncated && b != kTruncated && b < a)
                    ++table.monotonicity_violations;
            }
    }
    return table;
}

namespace {

ZetaCProbe probe_zeta(const ModelParams& params, int n, std::uint64_t trials,
                      double zeta, double theta_floor, std::uint64_t seed,
                      int threads, std::uint64_t budget) {
    TrialPlan plan;
    plan.params = params;
    plan.initial = InitialSpec::poisson(zeta);
    plan.n = n;
    plan.trials = trials;
    plan.master_seed = seed;  // shared across probes: criterion monotone in zeta
    plan.threads = threads;
    plan.budget = budget;
    const EmpiricalSummary sum = run_exit_stats(plan);
    ZetaCProbe p;
    p.zeta = zeta;
    p.mean = sum.mean_mn_over_n;
    p.se = sum.se;
    p.active = sum.mean_mn_over_n > std::max(3.0 * sum.se, theta_floor);
    return p;
}

} // namespace

ZetaCBracket estimate_zeta_c(const ModelParams& params, int n, std::uint64_t trials,
                             double tol, std::uint64_t seed, int threads,
                             std::uint64_t budget, double theta_floor) {
    if (!(tol > 0.0)) throw Error("estimate_zeta_c: tol must be > 0");
    if (!(theta_floor >= 0.0)) throw Error("estimate_zeta_c: theta must be >= 0");
    ZetaCBracket bracket;
    bracket.lo = 0.0;
    bracket.hi = 1.0;
    const std::uint64_t probe_seed = derive_seed(seed, 101);
    ZetaCProbe top = probe_zeta(params, n, trials, 1.0, theta_floor, probe_seed,
                                threads, budget);
    bracket.trace.push_back(top);
    if (!top.active) return bracket;  // no activity even at density 1: give up wide
    while (bracket.hi - bracket.lo > tol) {
        const double mid = 0.5 * (bracket.lo + bracket.hi);
        const ZetaCProbe p = probe_zeta(params, n, trials, mid, theta_floor,
                                        probe_seed, threads, budget);
        bracket.trace.push_back(p);
        ++bracket.iterations;
        if (p.active) bracket.hi = mid;
        else bracket.lo = mid;
    }
    return bracket;
}

namespace {

BoundCheck check_generator(const ModelParams& params, const InitialSpec& initial,
                           const std::string& label, int n, std::uint64_t trials,
                           double epsilon, std::uint64_t seed, int threads,
                           std::uint64_t budget, bool upper, double bound) {
    TrialPlan plan;
    plan.params = params;
    plan.initial = initial;
    plan.n = n;
    plan.trials = trials;
    plan.master_seed = seed;
    plan.epsilon = epsilon;
    plan.threads = threads;
    plan.budget = budget;
    const EmpiricalSummary sum = run_exit_stats(plan);
    BoundCheck c;
    c.generator = label;
    c.bound = bound;
    if (upper) {  // estimate must not exceed the bound (minus CI slack)
        c.estimate = sum.p_zero;
        c.ci_lo = sum.p_zero_lo;
        c.ci_hi = sum.p_zero_hi;
        c.pass = c.ci_lo <= bound;
    } else {  // estimate must reach the bound (plus CI slack)
        c.estimate = sum.p_tail;
        c.ci_lo = sum.p_tail_lo;
        c.ci_hi = sum.p_tail_hi;
        c.pass = c.ci_hi >= bound;
    }
    return c;
}

} // namespace

TheoremReport check_thm_no_exit(const ModelParams& params, double zeta, int n,
                                std::uint64_t trials, double zeta_c_hat,
                                std::uint64_t seed, int threads,
                                std::uint64_t budget) {
    if (!(zeta > zeta_c_hat))
        throw Error("no-exit check needs zeta above the critical estimate");
    const double bound = zeta_c_hat / zeta;
    TheoremReport rep;
    rep.vacuous = bound >= 1.0;
    rep.checks.push_back(check_generator(params, InitialSpec::flat(zeta, n), "flat",
                                         n, trials, 0.0, derive_seed(seed, 1),
                                         threads, budget, true, bound));
    rep.checks.push_back(check_generator(params, InitialSpec::point_mass(zeta),
                                         "point", n, trials, 0.0,
                                         derive_seed(seed, 2), threads, budget,
                                         true, bound));
    rep.pass = rep.checks[0].pass && rep.checks[1].pass;
    return rep;
}

TheoremReport check_thm_explicit(const ModelParams& params, double zeta, int n,
                                 std::uint64_t trials, double zeta_c_hat,
                                 double epsilon, std::uint64_t seed, int threads,
                                 std::uint64_t budget) {
    if (!(zeta > zeta_c_hat))
        throw Error("explicit-fraction check needs zeta above the critical estimate");
    const double lambda = params.lambda;
    const double eps_max =
        lambda * (zeta - zeta_c_hat) / (4.0 * (1.0 + lambda) * zeta_c_hat);
    if (!(epsilon >= 0.0 && epsilon < eps_max))
        throw EpsilonOutOfRange("epsilon must lie in [0, " +
                                std::to_string(eps_max) + ")");
    const double bound =
        1.0 - (zeta_c_hat / zeta) * (1.0 + 4.0 * (1.0 + lambda) * epsilon / lambda);
    TheoremReport rep;
    rep.epsilon_max = eps_max;
    rep.vacuous = bound <= 0.0;
    rep.checks.push_back(check_generator(params, InitialSpec::flat(zeta, n), "flat",
                                         n, trials, epsilon, derive_seed(seed, 1),
                                         threads, budget, false, bound));
    rep.checks.push_back(check_generator(params, InitialSpec::point_mass(zeta),
                                         "point", n, trials, epsilon,
                                         derive_seed(seed, 2), threads, budget,
                                         false, bound));
    rep.pass = rep.checks[0].pass && rep.checks[1].pass;
    return rep;
}

TrendReport check_critical_decay(const ModelParams& params, double zeta,
                                 const std::vector<int>& n_list,
                                 std::uint64_t trials, std::uint64_t seed,
                                 int threads, std::uint64_t budget) {
    if (n_list.empty()) throw Error("critical decay check: empty n list");
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i] >= n_list[i + 1])
            throw Error("critical decay check: n list must increase");
    TrendReport rep;
    for (int n : n_list) {
        TrialPlan plan;
        plan.params = params;
        plan.initial = InitialSpec::poisson(zeta);
        plan.n = n;
        plan.trials = trials;
        plan.master_seed = derive_seed(seed, static_cast<std::uint64_t>(n));
        plan.threads = threads;
        plan.budget = budget;
        const EmpiricalSummary sum = run_exit_stats(plan);
        rep.points.push_back(
            {n, sum.mean_mn_over_n, sum.se, sum.excluded_truncated});
    }
    rep.non_increasing = true;
    for (std::size_t i = 0; i + 1 < rep.points.size(); ++i) {
        const TrendPoint& a = rep.points[i];
        const TrendPoint& b = rep.points[i + 1];
        if (b.mean > a.mean + 2.0 * std::sqrt(a.se * a.se + b.se * b.se))
            rep.non_increasing = false;
    }
    const TrendPoint& first = rep.points.front();
    const TrendPoint& last = rep.points.back();
    rep.increasing =
        last.mean >
        first.mean + 2.0 * std::sqrt(first.se * first.se + last.se * last.se);
    rep.level_positive =
        last.mean > 3.0 * last.se && last.mean >= 0.5 * first.mean;
    return rep;
}

} // namespace arw
