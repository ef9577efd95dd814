#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "arw/coupling.hpp"
#include "arw/experiments.hpp"
#include "arw/parallel.hpp"
#include "arw/report.hpp"
#include "arw/rng.hpp"
#include "arw/stabilize.hpp"
#include "arw/stats.hpp"

namespace {

using namespace arw;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;
constexpr int kExitUsage = 64;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t default_budget() {
    if (const char* s = std::getenv("ARW_BUDGET")) {
        const std::uint64_t b = std::strtoull(s, nullptr, 10);
        if (b > 0) return b;
    }
    return kDefaultToppleBudget;
}

// eta specs: "single" (one particle at the origin), "<k>/site", a comma
// list of per-site counts, or a random family "flat" | "poisson" |
// "bern" | "point" parameterized by --zeta.
InitialSpec parse_eta(const std::string& spec, int n, double zeta) {
    if (spec == "single") {
        std::vector<std::uint32_t> counts(static_cast<std::size_t>(n), 0);
        counts[static_cast<std::size_t>(-segment(n).lo)] = 1;
        return InitialSpec::deterministic(std::move(counts));
    }
    if (spec == "flat") return InitialSpec::flat(zeta, n);
    if (spec == "poisson") return InitialSpec::poisson(zeta);
    if (spec == "bern") return InitialSpec::bernoulli_like(zeta);
    if (spec == "point") return InitialSpec::point_mass(zeta);
    const auto slash = spec.find("/site");
    if (slash != std::string::npos) {
        const std::uint32_t k =
            static_cast<std::uint32_t>(std::strtoul(spec.c_str(), nullptr, 10));
        return InitialSpec::deterministic(
            std::vector<std::uint32_t>(static_cast<std::size_t>(n), k));
    }
    std::vector<std::uint32_t> counts;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ','))
        counts.push_back(
            static_cast<std::uint32_t>(std::strtoul(tok.c_str(), nullptr, 10)));
    if (static_cast<int>(counts.size()) != n)
        throw Error("eta list must have exactly n entries");
    return InitialSpec::deterministic(std::move(counts));
}

Strategy parse_strategy(const std::string& s) {
    if (s == "leftmost") return Strategy::LeftmostActive;
    if (s == "rightmost") return Strategy::RightmostActive;
    if (s == "closest") return Strategy::ClosestToOrigin;
    if (s == "random") return Strategy::SeededRandomActive;
    if (s == "queue") return Strategy::QueueOrder;
    throw Error("unknown strategy: " + s);
}

struct Outputs {
    std::string prefix;
    nlohmann::json manifest;

    void finish(const std::string& csv) const {
        write_text_file(prefix + ".csv", csv);
        nlohmann::json m = manifest;
        m["finished"] = iso8601_now();
        write_text_file(prefix + ".manifest.json", m.dump(2) + "\n");
    }
};

std::string join_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

int cmd_stabilize(const ModelParams& params, int n, const std::string& eta_spec,
                  double zeta, const std::string& strategy, std::uint64_t seed,
                  Outputs& out) {
    const InitialSpec initial = parse_eta(eta_spec, n, zeta);
    StabilizeRequest req;
    req.initial = initial.realize(n, derive_seed(seed, 0));
    req.target = segment(n);
    req.kill = segment(n);
    req.strategy = parse_strategy(strategy);
    req.strategy_seed = derive_seed(seed, 2);
    req.budget = default_budget();
    InstructionArray array(params, derive_seed(seed, 1));
    const StabilizationReport rep = stabilize(req, array);

    std::string csv = "# schema: arw.stabilize.v1\nsite,state,count,odometer\n";
    const Interval v = segment(n);
    for (int x = v.lo; x <= v.hi; ++x) {
        const SiteContent& c = rep.final.at(x);
        const char* state = c.is_empty() ? "empty" : c.is_sleeping() ? "sleeping"
                                                                     : "active";
        csv += std::to_string(x) + "," + state + "," +
               std::to_string(c.particles()) + "," +
               std::to_string(rep.odometer.get(x)) + "\n";
    }
    out.manifest["result"] = {{"exits_total", rep.exits_total},
                              {"exits_left", rep.exits_left},
                              {"exits_right", rep.exits_right},
                              {"topplings", rep.topplings},
                              {"truncated", rep.truncated}};
    out.finish(csv);
    std::printf("exits=%llu topplings=%llu truncated=%d\n",
                static_cast<unsigned long long>(rep.exits_total),
                static_cast<unsigned long long>(rep.topplings),
                rep.truncated ? 1 : 0);
    return rep.truncated ? kExitError : kExitOk;
}

int cmd_exit_stats(const ModelParams& params, int n, const std::string& eta_spec,
                   double zeta, std::uint64_t trials, double eps,
                   std::uint64_t seed, int threads, Outputs& out) {
    TrialPlan plan;
    plan.params = params;
    plan.initial = parse_eta(eta_spec, n, zeta);
    plan.n = n;
    plan.trials = trials;
    plan.master_seed = seed;
    plan.epsilon = eps;
    plan.threads = threads;
    plan.budget = default_budget();
    const EmpiricalSummary sum = run_exit_stats(plan);

    std::string csv =
        "# schema: arw.exit-stats.v1\n"
        "n,lambda,p_right,zeta,trials,mean_Mn_over_n,se,p_zero,p_zero_lo,"
        "p_zero_hi,p_tail,excluded\n";
    csv += std::to_string(n) + "," + fmt(params.lambda) + "," +
           fmt(params.p_right) + "," + fmt(plan.initial.mean_density(n)) + "," +
           std::to_string(sum.trials) + "," + fmt(sum.mean_mn_over_n) + "," +
           fmt(sum.se) + "," + fmt(sum.p_zero) + "," + fmt(sum.p_zero_lo) + "," +
           fmt(sum.p_zero_hi) + "," + fmt(sum.p_tail) + "," +
           std::to_string(sum.excluded_truncated) + "\n";
    out.manifest["excluded_truncated"] = sum.excluded_truncated;
    out.finish(csv);
    std::printf("p_zero=%s [%s, %s] mean=%s\n", fmt(sum.p_zero).c_str(),
                fmt(sum.p_zero_lo).c_str(), fmt(sum.p_zero_hi).c_str(),
                fmt(sum.mean_mn_over_n).c_str());
    return kExitOk;
}

int cmd_hockey_stick(const ModelParams& params, const std::vector<double>& zetas,
                     const std::vector<int>& ns, std::uint64_t trials,
                     std::uint64_t seed, int threads, Outputs& out) {
    const ScanTable table =
        hockey_stick_scan(params, zetas, ns, trials, seed, threads, default_budget());
    std::string csv = "# schema: arw.hockey-stick.v1\nzeta,n,mean_Mn_over_n,se,excluded\n";
    for (const ScanCell& c : table.cells)
        csv += fmt(c.zeta) + "," + std::to_string(c.n) + "," + fmt(c.mean) + "," +
               fmt(c.se) + "," + std::to_string(c.excluded) + "\n";
    out.manifest["monotonicity_violations"] = table.monotonicity_violations;
    out.finish(csv);
    std::printf("cells=%zu monotonicity_violations=%llu\n", table.cells.size(),
                static_cast<unsigned long long>(table.monotonicity_violations));
    return table.monotonicity_violations == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_zeta_c(const ModelParams& params, int n, std::uint64_t trials, double tol,
               double theta, std::uint64_t seed, int threads, Outputs& out) {
    const ZetaCBracket b = estimate_zeta_c(params, n, trials, tol, seed, threads,
                                           default_budget(), theta);
    std::string csv = "# schema: arw.zeta-c.v1\n";
    csv += "# bracket: lo=" + fmt(b.lo) + " hi=" + fmt(b.hi) +
           " iterations=" + std::to_string(b.iterations) + "\n";
    csv += "zeta,mean_Mn_over_n,se,active\n";
    for (const ZetaCProbe& p : b.trace)
        csv += fmt(p.zeta) + "," + fmt(p.mean) + "," + fmt(p.se) + "," +
               (p.active ? "1" : "0") + "\n";
    out.manifest["bracket"] = {{"lo", b.lo}, {"hi", b.hi}, {"iterations", b.iterations}};
    out.finish(csv);
    std::printf("zeta_c in [%s, %s]\n", fmt(b.lo).c_str(), fmt(b.hi).c_str());
    return kExitOk;
}

int cmd_dominance(const ModelParams& params, int n, int strip,
                  const std::string& eta_spec, double zeta, std::uint64_t trials,
                  double delta, std::uint64_t seed, int threads, Outputs& out) {
    const InitialSpec initial = parse_eta(eta_spec, n, zeta);
    TrialPlan plan;
    plan.params = params;
    plan.initial = initial;
    plan.n = n;
    plan.trials = trials;
    plan.master_seed = derive_seed(seed, 1);
    plan.threads = threads;
    plan.budget = default_budget();
    const ExitSamples a = collect_exit_samples(plan);

    const Interval v = segment(n);
    const Interval w{v.lo - strip, v.hi + strip};
    const Config eta_cfg = initial.realize(n, derive_seed(seed, 0));
    std::vector<std::int64_t> b_raw(trials, -1);
    const std::uint64_t b_master = derive_seed(seed, 2);
    for_each_trial(trials, threads, [&](std::uint64_t t) {
        const NmlReport rep = stabilize_with_nml(eta_cfg, n, w, params,
                                                 derive_seed(b_master, t),
                                                 default_budget());
        if (!rep.truncated) b_raw[t] = static_cast<std::int64_t>(rep.exits);
    });
    std::vector<double> sa, sb;
    for (std::uint64_t m : a.m) sa.push_back(static_cast<double>(m));
    std::uint64_t b_excluded = 0;
    for (std::int64_t r : b_raw) {
        if (r < 0) ++b_excluded;
        else sb.push_back(static_cast<double>(r));
    }
    const DominanceVerdict verdict = dominance_test(sa, sb, delta);

    std::string csv =
        "# schema: arw.dominance.v1\n"
        "n,strip,trials,delta,one_sided_stat,threshold,pass,excluded_a,excluded_b\n";
    csv += std::to_string(n) + "," + std::to_string(strip) + "," +
           std::to_string(trials) + "," + fmt(delta) + "," +
           fmt(verdict.one_sided_stat) + "," + fmt(verdict.threshold) + "," +
           (verdict.pass ? "1" : "0") + "," +
           std::to_string(a.excluded_truncated) + "," +
           std::to_string(b_excluded) + "\n";
    out.finish(csv);
    std::printf("stat=%s threshold=%s pass=%d\n", fmt(verdict.one_sided_stat).c_str(),
                fmt(verdict.threshold).c_str(), verdict.pass ? 1 : 0);
    return verdict.pass ? kExitOk : kExitCheckFailed;
}

int cmd_spread(const ModelParams& params, int n, int k, int ell,
               const std::string& eta_spec, double zeta, std::uint64_t trials,
               std::uint64_t seed, int threads, Outputs& out) {
    const InitialSpec initial = parse_eta(eta_spec, n, zeta);

    TrialPlan small;
    small.params = params;
    small.initial = initial;
    small.n = n;
    small.trials = trials;
    small.master_seed = derive_seed(seed, 1);
    small.threads = threads;
    small.budget = default_budget();
    const ExitSamples ms = collect_exit_samples(small);

    const int big_n = n + 4 * ell;
    const Config eta_small = initial.realize(n, derive_seed(seed, 0));
    std::vector<std::uint32_t> padded(static_cast<std::size_t>(big_n), 0);
    const Interval v = segment(n), vb = segment(big_n);
    for (int x = v.lo; x <= v.hi; ++x)
        padded[static_cast<std::size_t>(x - vb.lo)] = eta_small.at(x).particles();
    TrialPlan big;
    big.params = params;
    big.initial = InitialSpec::deterministic(std::move(padded));
    big.n = big_n;
    big.trials = trials;
    big.master_seed = derive_seed(seed, 2);
    big.threads = threads;
    big.budget = default_budget();
    const EmpiricalSummary bs = run_exit_stats(big);

    std::uint64_t le_k = 0;
    for (std::uint64_t m : ms.m)
        if (m <= static_cast<std::uint64_t>(k)) ++le_k;
    const double p_le_k = static_cast<double>(le_k) / static_cast<double>(ms.m.size());
    const double se_le_k =
        std::sqrt(p_le_k * (1.0 - p_le_k) / static_cast<double>(ms.m.size()));
    const double se_zero = std::sqrt(bs.p_zero * (1.0 - bs.p_zero) /
                                     static_cast<double>(bs.trials));
    const double nb = nb_success(static_cast<std::uint64_t>(k), ell,
                                 params.lambda / (1.0 + params.lambda));
    const double rhs = p_le_k * nb;
    const double margin = 3.0 * std::sqrt(se_zero * se_zero + nb * nb * se_le_k * se_le_k);
    const bool pass = bs.p_zero >= rhs - margin;

    std::string csv =
        "# schema: arw.spread.v1\n"
        "n,k,ell,trials,p_zero_enlarged,p_mn_le_k,nb_success,rhs,margin,pass\n";
    csv += std::to_string(n) + "," + std::to_string(k) + "," + std::to_string(ell) +
           "," + std::to_string(trials) + "," + fmt(bs.p_zero) + "," + fmt(p_le_k) +
           "," + fmt(nb) + "," + fmt(rhs) + "," + fmt(margin) + "," +
           (pass ? "1" : "0") + "\n";
    out.finish(csv);
    std::printf("p_zero(%d)=%s >= %s - %s pass=%d\n", big_n, fmt(bs.p_zero).c_str(),
                fmt(rhs).c_str(), fmt(margin).c_str(), pass ? 1 : 0);
    return pass ? kExitOk : kExitCheckFailed;
}

int cmd_coupling(const ModelParams& params, int block_n, int K, double q,
                 const std::string& eta_spec, double zeta, std::uint64_t traces,
                 std::uint64_t p_trials, std::uint64_t seed, int threads,
                 bool jsonl, Outputs& out) {
    BlockSpec spec;
    spec.n = block_n;
    spec.K = K;
    spec.q = q;
    const InitialSpec initial = parse_eta(eta_spec, block_n, zeta);
    const Config eta_cfg = initial.realize(block_n, derive_seed(seed, 0));
    spec.eta.assign(static_cast<std::size_t>(block_n), 0);
    const Interval v = segment(block_n);
    for (int x = v.lo; x <= v.hi; ++x)
        spec.eta[static_cast<std::size_t>(x - v.lo)] = eta_cfg.at(x).particles();

    std::vector<CouplingTrace> results(traces);
    const std::uint64_t trace_master = derive_seed(seed, 1);
    for_each_trial(traces, threads, [&](std::uint64_t t) {
        results[t] = run_coupling(spec, params, derive_seed(trace_master, t));
    });

    // Independent estimate of the good-stabilization probability.
    TrialPlan plan;
    plan.params = params;
    plan.initial = InitialSpec::deterministic(spec.eta);
    plan.n = block_n;
    plan.trials = p_trials;
    plan.master_seed = derive_seed(seed, 2);
    plan.threads = threads;
    plan.budget = default_budget();
    const EmpiricalSummary psum = run_exit_stats(plan);

    std::uint64_t aborted = 0, visited = 0, violations = 0, excess = 0;
    for (const CouplingTrace& t : results) {
        if (t.aborted) ++aborted;
        if (t.coarse_origin_visited) ++visited;
        if (!t.aborted && !t.coarse_origin_visited && t.block0_odometer_nonzero)
            ++violations;
        excess = std::max(excess, t.max_coarse_jumps_excess);
    }
    const TauPrimeReport tau = tau_prime_marginal_stats(results, psum.p_zero);

    if (jsonl) {
        std::ofstream js(out.prefix + ".jsonl", std::ios::binary);
        for (const CouplingTrace& t : results) write_trace_jsonl(t, js);
    }

    std::string csv =
        "# schema: arw.coupling.v1\n"
        "traces,aborted,origin_visited,implication_violations,jump_bound_excess,"
        "tau_consumed,sleep_freq,ci_lo,ci_hi,p_hat,within_ci,wrong_direction\n";
    csv += std::to_string(traces) + "," + std::to_string(aborted) + "," +
           std::to_string(visited) + "," + std::to_string(violations) + "," +
           std::to_string(excess) + "," + std::to_string(tau.consumed) + "," +
           fmt(tau.sleep_freq) + "," + fmt(tau.ci_lo) + "," + fmt(tau.ci_hi) + "," +
           fmt(tau.p_hat) + "," + (tau.within_ci ? "1" : "0") + "," +
           std::to_string(tau.wrong_direction) + "\n";
    out.finish(csv);
    std::printf(
        "traces=%llu aborted=%llu origin_visited=%llu violations=%llu "
        "sleep_freq=%s p_hat=%s within_ci=%d\n",
        static_cast<unsigned long long>(traces),
        static_cast<unsigned long long>(aborted),
        static_cast<unsigned long long>(visited),
        static_cast<unsigned long long>(violations), fmt(tau.sleep_freq).c_str(),
        fmt(tau.p_hat).c_str(), tau.within_ci ? 1 : 0);
    const bool ok = violations == 0 && excess == 0 && tau.wrong_direction == 0 &&
                    tau.within_ci;
    return ok ? kExitOk : kExitCheckFailed;
}

int cmd_check(const ModelParams& params, const std::string& theorem, double zeta,
              int n, const std::vector<int>& n_list, std::uint64_t trials,
              std::uint64_t zeta_c_trials, double tol, double theta, double eps,
              std::uint64_t seed, int threads, Outputs& out) {
    const std::uint64_t budget = default_budget();
    const ZetaCBracket bracket =
        estimate_zeta_c(params, n, zeta_c_trials, tol, derive_seed(seed, 11),
                        threads, budget, theta);
    out.manifest["zeta_c_bracket"] = {{"lo", bracket.lo}, {"hi", bracket.hi}};

    std::string csv = "# schema: arw.check." + theorem + ".v1\n";
    csv += "# zeta_c bracket: [" + fmt(bracket.lo) + ", " + fmt(bracket.hi) + "]\n";
    int status = kExitOk;

    if (theorem == "no-exit" || theorem == "explicit") {
        const double z = zeta > 0.0 ? zeta : 2.0 * bracket.hi;
        TheoremReport rep;
        if (theorem == "no-exit")
            rep = check_thm_no_exit(params, z, n, trials, bracket.hi,
                                    derive_seed(seed, 12), threads, budget);
        else
            rep = check_thm_explicit(params, z, n, trials, bracket.hi, eps,
                                     derive_seed(seed, 12), threads, budget);
        csv += "generator,zeta,estimate,ci_lo,ci_hi,bound,pass\n";
        for (const BoundCheck& c : rep.checks)
            csv += c.generator + "," + fmt(z) + "," + fmt(c.estimate) + "," +
                   fmt(c.ci_lo) + "," + fmt(c.ci_hi) + "," + fmt(c.bound) + "," +
                   (c.pass ? "1" : "0") + "\n";
        out.manifest["vacuous"] = rep.vacuous;
        if (theorem == "explicit") out.manifest["epsilon_max"] = rep.epsilon_max;
        status = rep.pass ? kExitOk : kExitCheckFailed;
        std::printf("%s: pass=%d (bound vacuous=%d)\n", theorem.c_str(),
                    rep.pass ? 1 : 0, rep.vacuous ? 1 : 0);
    } else if (theorem == "critical-decay") {
        const double z = zeta > 0.0 ? zeta : 0.5 * (bracket.lo + bracket.hi);
        const TrendReport rep = check_critical_decay(
            params, z, n_list, trials, derive_seed(seed, 13), threads, budget);
        csv += "n,zeta,mean_Mn_over_n,se,excluded\n";
        for (const TrendPoint& p : rep.points)
            csv += std::to_string(p.n) + "," + fmt(z) + "," + fmt(p.mean) + "," +
                   fmt(p.se) + "," + std::to_string(p.excluded) + "\n";
        out.manifest["non_increasing"] = rep.non_increasing;
        out.manifest["increasing"] = rep.increasing;
        out.manifest["level_positive"] = rep.level_positive;
        status = rep.non_increasing ? kExitOk : kExitCheckFailed;
        std::printf("critical-decay: non_increasing=%d increasing=%d "
                    "level_positive=%d\n",
                    rep.non_increasing ? 1 : 0, rep.increasing ? 1 : 0,
                    rep.level_positive ? 1 : 0);
    } else {
        throw Error("unknown theorem: " + theorem);
    }
    out.finish(csv);
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"activated random walk stabilization experiments"};
    app.require_subcommand(1);

    ModelParams params;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_prefix = "arw_out";
    app.add_option("--lambda", params.lambda, "sleep rate")->capture_default_str();
    app.add_option("--p-right", params.p_right, "right jump probability")
        ->capture_default_str();
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--threads", threads, "trial fan-out threads")
        ->capture_default_str();
    app.add_option("--out", out_prefix, "output file prefix")->capture_default_str();

    int n = 1;
    double zeta = 0.0, eps = 0.0, tol = 0.05, delta = 0.01, q = 0.2;
    double theta = kDefaultThetaFloor;
    std::string eta = "single", strategy = "leftmost", theorem;
    std::uint64_t trials = 10000, p_trials = 20000, traces = 1000;
    int strip = 10, k_exits = 3, ell = 30, K = 20, block_n = 5;
    std::vector<double> zeta_grid;
    std::vector<int> n_list{50, 100, 200, 400};
    bool jsonl = false;

    auto* c_stab = app.add_subcommand("stabilize", "stabilize one configuration");
    c_stab->add_option("--n", n, "segment length")->required();
    c_stab->add_option("--eta", eta, "initial configuration spec");
    c_stab->add_option("--zeta", zeta, "density for random eta specs");
    c_stab->add_option("--strategy", strategy,
                       "leftmost|rightmost|closest|random|queue");

    auto* c_exit = app.add_subcommand("exit-stats", "Monte Carlo exit statistics");
    c_exit->add_option("--n", n, "segment length")->required();
    c_exit->add_option("--eta", eta, "initial configuration spec");
    c_exit->add_option("--zeta", zeta, "density for random eta specs");
    c_exit->add_option("--trials", trials, "trial count");
    c_exit->add_option("--eps", eps, "tail threshold for P(M_n > eps n)");

    auto* c_hs = app.add_subcommand("hockey-stick", "mean exit fraction scan");
    c_hs->add_option("--zeta", zeta_grid, "density grid")->required();
    c_hs->add_option("--n", n_list, "segment lengths");
    c_hs->add_option("--trials", trials, "trials per cell");

    auto* c_zc = app.add_subcommand("zeta-c", "bracket the critical density");
    c_zc->add_option("--n", n, "segment length")->required();
    c_zc->add_option("--trials", trials, "trials per probe");
    c_zc->add_option("--tol", tol, "bracket width");
    c_zc->add_option("--theta", theta, "absolute activity floor");

    auto* c_dom = app.add_subcommand("dominance", "exit counts vs no man's land");
    c_dom->add_option("--n", n, "segment length")->required();
    c_dom->add_option("--strip", strip, "no man's land width per side");
    c_dom->add_option("--eta", eta, "initial configuration spec");
    c_dom->add_option("--zeta", zeta, "density for random eta specs");
    c_dom->add_option("--trials", trials, "trials per sample");
    c_dom->add_option("--delta", delta, "DKW confidence parameter");

    double alpha = 0.0;
    auto* c_spr = app.add_subcommand("spread", "no-exit enlargement inequality");
    c_spr->add_option("--n", n, "segment length")->required();
    c_spr->add_option("--k", k_exits, "exit count threshold");
    c_spr->add_option("--ell", ell, "buffer length");
    c_spr->add_option("--alpha", alpha, "buffer length as a fraction of n");
    c_spr->add_option("--eta", eta, "initial configuration spec");
    c_spr->add_option("--zeta", zeta, "density for random eta specs");
    c_spr->add_option("--trials", trials, "trials per estimate");

    auto* c_cpl = app.add_subcommand("coupling", "block / coarse-grained coupling");
    c_cpl->add_option("--block-n", block_n, "block length");
    c_cpl->add_option("--K", K, "coarse window half-width in blocks");
    c_cpl->add_option("--q", q, "block occupancy probability");
    c_cpl->add_option("--eta", eta, "block content spec");
    c_cpl->add_option("--zeta", zeta, "density for random eta specs");
    c_cpl->add_option("--traces", traces, "number of coupling runs");
    c_cpl->add_option("--p-trials", p_trials, "trials for the independent p estimate");
    c_cpl->add_flag("--jsonl", jsonl, "write per-step trace records");

    auto* c_chk = app.add_subcommand("check", "theorem consistency checks");
    c_chk->add_option("--theorem", theorem, "no-exit|explicit|critical-decay")
        ->required();
    c_chk->add_option("--zeta", zeta, "test density (default from the bracket)");
    c_chk->add_option("--n", n, "segment length");
    c_chk->add_option("--n-list", n_list, "segment lengths for critical-decay");
    c_chk->add_option("--trials", trials, "trials per estimate");
    c_chk->add_option("--zeta-c-trials", p_trials, "trials per bisection probe");
    c_chk->add_option("--tol", tol, "bracket width");
    c_chk->add_option("--theta", theta, "absolute activity floor");
    c_chk->add_option("--eps", eps, "tail threshold");

    // let --lambda, --seed, ... appear after the subcommand name
    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    Outputs out;
    out.prefix = out_prefix;
    out.manifest = make_manifest(join_argv(argc, argv), seed);
    out.manifest["params"] = {{"lambda", params.lambda}, {"p_right", params.p_right}};
    out.manifest["threads"] = threads;
    out.manifest["budget"] = default_budget();

    try {
        if (*c_stab)
            return cmd_stabilize(params, n, eta, zeta, strategy, seed, out);
        if (*c_exit)
            return cmd_exit_stats(params, n, eta, zeta, trials, eps, seed, threads,
                                  out);
        if (*c_hs)
            return cmd_hockey_stick(params, zeta_grid, n_list, trials, seed,
                                    threads, out);
        if (*c_zc)
            return cmd_zeta_c(params, n, trials, tol, theta, seed, threads, out);
        if (*c_dom)
            return cmd_dominance(params, n, strip, eta, zeta, trials, delta, seed,
                                 threads, out);
        if (*c_spr) {
            if (alpha > 0.0) ell = static_cast<int>(alpha * n + 0.5);
            return cmd_spread(params, n, k_exits, ell, eta, zeta, trials, seed,
                              threads, out);
        }
        if (*c_cpl) {
            if (eta == "single") eta = "1/site";  // block content default
            return cmd_coupling(params, block_n, K, q, eta, zeta, traces, p_trials,
                                seed, threads, jsonl, out);
        }
        if (*c_chk) {
            const int check_n = c_chk->count("--n") ? n : 200;
            return cmd_check(params, theorem, c_chk->count("--zeta") ? zeta : 0.0,
                             check_n, n_list, trials, p_trials, tol, theta, eps,
                             seed, threads, out);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitUsage;
}
