#include "urnlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <thread>

#include "urnlab/serialize.hpp"

namespace urnlab {

namespace {

int resolve_jobs(int jobs, uint64_t R) {
    if (jobs <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        jobs = hw > 0 ? static_cast<int>(hw) : 1;
    }
    if (static_cast<uint64_t>(jobs) > R) jobs = static_cast<int>(R);
    return jobs < 1 ? 1 : jobs;
}

// slot-per-replicate fan-out: worker w claims indices from a shared counter,
// replicate k always runs on rng(derive_seed(seed, k)), so the table contents
// never depend on the worker count
template <class Fn>
void parallel_replicates(const SamplerTable& table, uint64_t R, uint64_t seed,
                         int jobs, Fn fn) {
    int W = resolve_jobs(jobs, R);
    if (W == 1) {
        SampleWorkspace ws(table);
        for (uint64_t k = 0; k < R; ++k) {
            xoshiro256pp rng(derive_seed(seed, k));
            fn(k, ws, rng);
        }
        return;
    }
    std::atomic<uint64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(W);
    for (int w = 0; w < W; ++w) {
        pool.emplace_back([&] {
            SampleWorkspace ws(table);
            for (;;) {
                uint64_t k = next.fetch_add(1, std::memory_order_relaxed);
                if (k >= R) break;
                xoshiro256pp rng(derive_seed(seed, k));
                fn(k, ws, rng);
            }
        });
    }
    for (auto& th : pool) th.join();
}

// distinct seed blocks for independent phases of one experiment
uint64_t block_seed(uint64_t seed, uint64_t block) {
    return derive_seed(seed, block << 32);
}

template <class V>
QuantityStat make_stat(const std::string& name, const std::vector<V>& xs) {
    QuantityStat st;
    st.name = name;
    const size_t R = xs.size();
    long double acc = 0.0L;
    for (const V& x : xs) acc += static_cast<long double>(x);
    st.mean = static_cast<double>(acc / R);
    if (R > 1) {
        long double q = 0.0L;
        for (const V& x : xs) {
            long double d = static_cast<long double>(x) - st.mean;
            q += d * d;
        }
        double var = static_cast<double>(q / (R - 1));
        st.variance = var;
        st.se_mean = std::sqrt(var / R);
        st.se_variance = var * std::sqrt(2.0 / (R - 1));
    }
    return st;
}

const char* side_name(BoundSide s) {
    switch (s) {
        case BoundSide::left: return "left";
        case BoundSide::right: return "right";
        default: return "two_sided";
    }
}

// the one-sided deviation a tail certificate speaks about
double side_deviation(BoundSide side, double x, double center) {
    switch (side) {
        case BoundSide::left: return center - x;
        case BoundSide::right: return x - center;
        default: return std::fabs(x - center);
    }
}

BoundCheck tail_check(const BoundSpec& spec, double s, uint64_t exceed, uint64_t R) {
    BoundCheck c;
    c.quantity = spec.quantity;
    c.ref = spec.ref;
    c.side = side_name(spec.side);
    c.s = s;
    c.radius = spec.radius(s);
    c.bound = spec.multiplier * std::exp(-s);
    double b = std::min(std::max(c.bound, 0.0), 1.0);
    c.slack = 3.0 * std::sqrt(b * (1.0 - b) / static_cast<double>(R));
    c.exceedance = static_cast<double>(exceed) / static_cast<double>(R);
    c.pass = c.exceedance <= c.bound + c.slack;
    return c;
}

// identity-style verdict: `bound` holds the target value, `exceedance` the
// empirical one, and `slack` the full allowance
BoundCheck value_check(const std::string& quantity, const std::string& ref,
                       const char* side, double target, double empirical,
                       double slack, bool empirical_at_most) {
    BoundCheck c;
    c.quantity = quantity;
    c.ref = ref;
    c.side = side;
    c.bound = target;
    c.exceedance = empirical;
    c.slack = slack;
    c.pass = empirical_at_most ? empirical <= target + slack
                               : empirical >= target - slack;
    return c;
}

std::string g17(double x) { return format_g17(x); }

uint64_t cumulated_of(const ReplicateTable& tab, uint64_t r, uint64_t k) {
    uint64_t below = 0;
    for (uint64_t i = 1; i < r; ++i) below += tab.k_r[i][k];
    return tab.distinct[k] - below;
}

double poisson_upper_tail(double lam, uint64_t r) {
    if (r == 0) return 1.0;
    double cdf = 0.0, pmf = std::exp(-lam);
    for (uint64_t i = 0; i < r; ++i) {
        cdf += pmf;
        pmf *= lam / static_cast<double>(i + 1);
    }
    return cdf < 1.0 ? 1.0 - cdf : 0.0;
}

// visits every outcome of n draws from a finite pmf with its probability
template <class Visit>
void for_each_outcome(const std::vector<double>& p, int n, Visit visit) {
    const int J = static_cast<int>(p.size());
    std::vector<int> draw(n, 0);
    std::vector<uint32_t> counts(J, 0);
    for (;;) {
        std::fill(counts.begin(), counts.end(), 0);
        long double w = 1.0L;
        for (int i = 0; i < n; ++i) {
            w *= p[draw[i]];
            ++counts[draw[i]];
        }
        visit(w, counts);
        int pos = n - 1;
        while (pos >= 0 && draw[pos] == J - 1) draw[pos--] = 0;
        if (pos < 0) break;
        ++draw[pos];
    }
}

void require_small_instance(const std::vector<double>& p, int n) {
    if (p.empty() || p.size() > 4 || n < 1 || n > 4)
        throw std::invalid_argument("exhaustive oracle needs support <= 4 and n <= 4");
}

double missing_of(const std::vector<double>& p, const std::vector<uint32_t>& counts) {
    double m = 0.0;
    for (size_t j = 0; j < p.size(); ++j)
        if (counts[j] == 0) m += p[j];
    return m;
}

uint64_t cumulated_of_counts(const std::vector<uint32_t>& counts, uint64_t r) {
    uint64_t k = 0;
    for (uint32_t c : counts) k += c >= r;
    return k;
}

} // namespace

bool McReport::all_pass() const {
    for (const auto& b : bound_checks)
        if (!b.pass) return false;
    if (coverage && !coverage->pass) return false;
    if (ks && !ks->pass) return false;
    return true;
}

ReplicateTable run_replicates_raw(ModelPtr model, Setting st, double nt, uint64_t R,
                                  uint64_t seed, int jobs) {
    if (R < 1) throw std::invalid_argument("need at least one replicate");
    SamplerTable table(model);
    ReplicateTable tab;
    tab.R = R;
    tab.distinct.resize(R);
    for (int r = 1; r <= kProfileRMax; ++r) tab.k_r[r].resize(R);
    tab.m0.resize(R);
    tab.g0.resize(R);
    tab.max_symbol.resize(R);
    tab.realized_n.resize(R);

    parallel_replicates(table, R, seed, jobs,
                        [&](uint64_t k, SampleWorkspace& ws, xoshiro256pp& rng) {
                            auto sum = run_replicate(table, ws, st, nt, rng);
                            tab.distinct[k] = static_cast<uint32_t>(sum.distinct);
                            for (int r = 1; r <= kProfileRMax; ++r)
                                tab.k_r[r][k] = static_cast<uint32_t>(sum.k_r[r]);
                            tab.m0[k] = sum.missing_mass();
                            tab.g0[k] = static_cast<double>(sum.k_r[1]) / nt;
                            tab.max_symbol[k] = sum.max_symbol;
                            tab.realized_n[k] = sum.n;
                        });
    return tab;
}

McReport run_replicates(ModelPtr model, Setting st, double nt, uint64_t R,
                        uint64_t seed, int jobs) {
    auto tab = run_replicates_raw(model, st, nt, R, seed, jobs);

    McReport rep;
    rep.experiment = "replicates";
    rep.model_spec = model->spec_string();
    rep.setting = st;
    rep.nt = nt;
    rep.replicates = R;
    rep.seed = seed;
    rep.stats.push_back(make_stat("coverage", tab.distinct));
    for (int r = 1; r <= kProfileRMax; ++r)
        rep.stats.push_back(make_stat("count_r" + std::to_string(r), tab.k_r[r]));
    rep.stats.push_back(make_stat("missing_mass", tab.m0));
    rep.stats.push_back(make_stat("good_turing", tab.g0));
    std::vector<double> gap(tab.R);
    for (uint64_t k = 0; k < tab.R; ++k) gap[k] = tab.g0[k] - tab.m0[k];
    rep.stats.push_back(make_stat("gt_gap", gap));
    return rep;
}

McReport check_tail_bounds(ModelPtr model, Setting st, double nt, uint64_t R,
                           uint64_t seed, const std::vector<double>& s_grid, int jobs) {
    const std::vector<double> grid =
        s_grid.empty() ? std::vector<double>{0.5, 1.0, 2.0, 3.0} : s_grid;
    auto tab = run_replicates_raw(model, st, nt, R, seed, jobs);
    auto mrep = build_moment_report(*model, st, nt, 3, 1e-9);

    struct Target {
        BoundSpec spec;
        double center;
        std::function<double(uint64_t)> value;
    };
    std::vector<Target> targets;

    if (st == Setting::binomial) {
        for (uint64_t r : {uint64_t{1}, uint64_t{2}}) {
            targets.push_back({knr_bound(mrep, r), mrep.count_r[r].value,
                               [&tab, r](uint64_t k) {
                                   return static_cast<double>(tab.k_r[r][k]);
                               }});
            targets.push_back({knrbar_bound(mrep, r), mrep.cumulated_r[r].value,
                               [&tab, r](uint64_t k) {
                                   return static_cast<double>(cumulated_of(tab, r, k));
                               }});
        }
        auto vrep = build_variance_report(*model, nt, 1e-9);
        for (auto& spec : missing_mass_bounds(vrep))
            targets.push_back({std::move(spec), mrep.mass_r[0].value,
                               [&tab](uint64_t k) { return tab.m0[k]; }});
    } else {
        for (uint64_t r : {uint64_t{1}, uint64_t{2}})
            targets.push_back({kr_poisson_bound(mrep, r), mrep.count_r[r].value,
                               [&tab, r](uint64_t k) {
                                   return static_cast<double>(tab.k_r[r][k]);
                               }});
        for (auto& spec : gt_gap_bounds(mrep))
            targets.push_back({std::move(spec), 0.0, [&tab](uint64_t k) {
                                   return tab.g0[k] - tab.m0[k];
                               }});
    }

    McReport rep;
    rep.experiment = "tail-bounds";
    rep.model_spec = model->spec_string();
    rep.setting = st;
    rep.nt = nt;
    rep.replicates = R;
    rep.seed = seed;
    rep.stats.push_back(make_stat("coverage", tab.distinct));
    rep.stats.push_back(make_stat("count_r1", tab.k_r[1]));
    rep.stats.push_back(make_stat("missing_mass", tab.m0));

    for (const auto& tg : targets) {
        for (double s : grid) {
            double radius = tg.spec.radius(s);
            uint64_t exceed = 0;
            for (uint64_t k = 0; k < tab.R; ++k)
                exceed += side_deviation(tg.spec.side, tg.value(k), tg.center) >= radius;
            rep.bound_checks.push_back(tail_check(tg.spec, s, exceed, tab.R));
        }
    }

    // proxy looseness diagnostics: ratio of certificate variance to the
    // Monte Carlo variance of the missing mass
    if (st == Setting::binomial) {
        auto m0_stat = make_stat("m0", tab.m0);
        if (m0_stat.variance && *m0_stat.variance > 0.0) {
            for (const auto& tg : targets) {
                if (tg.spec.quantity != "missing-mass") continue;
                std::string key = "tightness-" + std::string(side_name(tg.spec.side)) +
                                  "-" + tg.spec.ref;
                rep.notes.push_back({key, g17(tg.spec.v / *m0_stat.variance)});
            }
            rep.notes.push_back({"var-mc-missing-mass", g17(*m0_stat.variance)});
        }
    }
    return rep;
}

McReport check_ci_coverage(ModelPtr model, double t, double delta, uint64_t R,
                           uint64_t seed, int jobs) {
    if (!(delta > 0.0) || !(delta < 0.25))
        throw std::invalid_argument("ci coverage: delta must lie in (0, 1/4)");
    SamplerTable table(model);
    std::vector<uint8_t> covered(R, 0);
    std::vector<double> m0(R, 0.0), widths(R, 0.0);

    parallel_replicates(table, R, seed, jobs,
                        [&](uint64_t k, SampleWorkspace& ws, xoshiro256pp& rng) {
                            auto sum = run_replicate(table, ws, Setting::poisson, t, rng);
                            auto prof = ws.to_profile(Setting::poisson, t);
                            auto est = gt_ci_poisson(prof, delta);
                            double truth = sum.missing_mass();
                            covered[k] = est.lower <= truth && truth <= est.upper;
                            m0[k] = truth;
                            widths[k] = est.upper - est.lower;
                        });

    McReport rep;
    rep.experiment = "ci-coverage";
    rep.model_spec = model->spec_string();
    rep.setting = Setting::poisson;
    rep.nt = t;
    rep.replicates = R;
    rep.seed = seed;
    rep.stats.push_back(make_stat("missing_mass", m0));
    rep.stats.push_back(make_stat("ci_width", widths));

    uint64_t hits = 0;
    for (uint8_t c : covered) hits += c;
    CoverageCheck cov;
    cov.delta = delta;
    cov.target = 1.0 - 4.0 * delta;
    cov.coverage = static_cast<double>(hits) / static_cast<double>(R);
    cov.slack = 3.0 * std::sqrt(cov.target * (1.0 - cov.target) / static_cast<double>(R));
    cov.pass = cov.coverage >= cov.target - cov.slack;
    rep.coverage = cov;
    return rep;
}

McReport check_clt(ModelPtr model, double t, uint64_t R, uint64_t seed, int jobs) {
    auto mrep = build_moment_report(*model, Setting::poisson, t, 2, 1e-9);
    auto tab = run_replicates_raw(model, Setting::poisson, t, R, seed, jobs);

    McReport rep;
    rep.experiment = "clt";
    rep.model_spec = model->spec_string();
    rep.setting = Setting::poisson;
    rep.nt = t;
    rep.replicates = R;
    rep.seed = seed;

    double scale = clt_normalizer(mrep);
    std::vector<double> z;
    z.reserve(R);
    for (uint64_t k = 0; k < tab.R; ++k)
        if (tab.m0[k] > 0.0) z.push_back(scale * (tab.g0[k] / tab.m0[k] - 1.0));

    rep.notes.push_back({"normalizer", g17(scale)});
    rep.notes.push_back({"ratios_used", std::to_string(z.size())});
    if (z.size() < R / 2 || z.size() < 10) {
        rep.notes.push_back({"verdict", "skipped: missing mass degenerate"});
        return rep;
    }
    rep.stats.push_back(make_stat("standardized_ratio", z));

    std::sort(z.begin(), z.end());
    const double m = static_cast<double>(z.size());
    double d = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        double f = norm_cdf(z[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / m - f);
        d = std::max(d, f - static_cast<double>(i) / m);
    }
    KsCheck ks;
    ks.statistic = d;
    ks.p_value = kolmogorov_q(std::sqrt(m) * d);
    ks.level = 0.01;
    ks.pass = ks.p_value > ks.level;
    rep.ks = ks;
    return rep;
}

McReport experiment_lighttail(double q, const std::vector<uint64_t>& n_grid,
                              uint64_t R, uint64_t seed, int jobs) {
    if (n_grid.empty()) throw std::invalid_argument("lighttail: empty n grid");
    auto geo = make_geometric(q);

    McReport rep;
    rep.experiment = "lighttail";
    rep.model_spec = geo->spec_string();
    rep.setting = Setting::binomial;
    rep.nt = static_cast<double>(n_grid.back());
    rep.replicates = R;
    rep.seed = seed;

    const double max_gap = (1.0 - q) / (q * q);
    double blind_freq_max = 0.0;
    for (size_t i = 0; i < n_grid.size(); ++i) {
        const uint64_t n = n_grid[i];
        auto tab = run_replicates_raw(geo, Setting::binomial, static_cast<double>(n), R,
                                      block_seed(seed, i), jobs);
        auto k_stat = make_stat("coverage@n=" + std::to_string(n), tab.distinct);
        auto max_stat = make_stat("max@n=" + std::to_string(n), tab.max_symbol);
        rep.stats.push_back(k_stat);
        rep.stats.push_back(max_stat);

        double slack = 3.0 * (k_stat.se_mean + max_stat.se_mean);
        rep.bound_checks.push_back(
            value_check("coverage-below-max@n=" + std::to_string(n),
                        "geometric-max-domination", "right", max_stat.mean, k_stat.mean,
                        slack, true));
        rep.bound_checks.push_back(
            value_check("coverage-near-max@n=" + std::to_string(n),
                        "geometric-max-domination", "left", max_stat.mean - max_gap,
                        k_stat.mean, slack, false));

        uint64_t blind = 0;
        for (uint64_t k = 0; k < tab.R; ++k)
            blind += tab.k_r[1][k] == 0 && tab.m0[k] > 0.0;
        double freq = static_cast<double>(blind) / static_cast<double>(R);
        blind_freq_max = std::max(blind_freq_max, freq);
        rep.notes.push_back({"gt-blind-freq@n=" + std::to_string(n), g17(freq)});
    }
    // the estimator is blind exactly when no singleton is present; a verdict
    // of zero across the grid means the pathology never materialized
    BoundCheck blind = value_check("gt-blind-nonzero", "good-turing-blind-spot",
                                   "right", 0.0, blind_freq_max, 0.0, false);
    blind.pass = blind_freq_max > 0.0;
    rep.bound_checks.push_back(blind);

    // factorial-decay frequencies: the missing mass should sit on two values
    const uint64_t n_two = n_grid.back();
    auto fac = make_factorial_decay();
    auto tab = run_replicates_raw(fac, Setting::binomial, static_cast<double>(n_two), R,
                                  block_seed(seed, n_grid.size()), jobs);
    std::map<double, uint64_t> hist;
    for (double v : tab.m0) ++hist[v];
    uint64_t top1 = 0, top2 = 0;
    for (const auto& [value, count] : hist) {
        (void)value;
        if (count >= top1) {
            top2 = top1;
            top1 = count;
        } else if (count > top2) {
            top2 = count;
        }
    }
    double two_point = static_cast<double>(top1 + top2) / static_cast<double>(R);
    rep.notes.push_back({"two-point-values", std::to_string(hist.size())});
    rep.bound_checks.push_back(value_check(
        "two-point-mass@n=" + std::to_string(n_two), "missing-mass-two-point",
        "left", 0.95, two_point, 0.0, false));
    return rep;
}

McReport experiment_asymptotics(ModelPtr model, const std::vector<uint64_t>& n_grid,
                                uint64_t seed, int jobs) {
    (void)jobs;
    if (n_grid.empty()) throw std::invalid_argument("asymptotics: empty n grid");
    const RvMeta* meta = model->rv_meta();
    if (!meta)
        throw std::domain_error("asymptotics experiment needs regular-variation metadata");
    const double tol = meta->alpha == 1.0 ? 0.15 : meta->alpha == 0.0 ? 0.20 : 0.05;

    McReport rep;
    rep.experiment = "asymptotics";
    rep.model_spec = model->spec_string();
    rep.setting = Setting::binomial;
    rep.nt = static_cast<double>(n_grid.back());
    rep.replicates = 1;
    rep.seed = seed;
    rep.notes.push_back({"alpha", g17(meta->alpha)});
    rep.notes.push_back({"ratio-tolerance", g17(tol)});

    SamplerTable table(model);
    SampleWorkspace ws(table);

    const char* names[4] = {"coverage", "count1", "count2", "count3"};
    for (size_t i = 0; i < n_grid.size(); ++i) {
        const uint64_t n = n_grid[i];
        auto mrep = build_moment_report(*model, Setting::binomial,
                                        static_cast<double>(n), 3, 1e-9);
        auto pred = karlin_asymptotics(*model, static_cast<double>(n), 3);

        xoshiro256pp rng(derive_seed(block_seed(seed, i), 0));
        auto sum = run_replicate(table, ws, Setting::binomial,
                                 static_cast<double>(n), rng);

        double exact[4] = {mrep.coverage.value, mrep.count_r[1].value,
                           mrep.count_r[2].value, mrep.count_r[3].value};
        double predicted[4] = {pred.coverage, pred.count_r[1], pred.count_r[2],
                               pred.count_r[3]};
        double realized[4] = {static_cast<double>(sum.distinct),
                              static_cast<double>(sum.k_r[1]),
                              static_cast<double>(sum.k_r[2]),
                              static_cast<double>(sum.k_r[3])};
        for (int j = 0; j < 4; ++j) {
            double ratio = exact[j] / predicted[j];
            rep.notes.push_back({std::string(names[j]) + "@n=" + std::to_string(n),
                                 "exact=" + g17(exact[j]) + ";pred=" + g17(predicted[j]) +
                                     ";ratio=" + g17(ratio) +
                                     ";realized=" + g17(realized[j])});
            if (i + 1 == n_grid.size()) {
                BoundCheck c = value_check(
                    std::string(names[j]) + "-ratio@n=" + std::to_string(n),
                    "karlin-regime-equivalents", "two_sided", 1.0, ratio, tol, true);
                c.pass = std::fabs(ratio - 1.0) <= tol;
                rep.bound_checks.push_back(c);
            }
        }
    }
    return rep;
}

McReport experiment_poissonization(ModelPtr model, uint64_t n, uint64_t R,
                                   uint64_t seed, int jobs) {
    auto gap = poissonization_gap(*model, n, 1e-9);
    auto tab = run_replicates_raw(model, Setting::binomial, static_cast<double>(n), R,
                                  seed, jobs);

    McReport rep;
    rep.experiment = "poissonization";
    rep.model_spec = model->spec_string();
    rep.setting = Setting::binomial;
    rep.nt = static_cast<double>(n);
    rep.replicates = R;
    rep.seed = seed;

    auto k_stat = make_stat("coverage", tab.distinct);
    rep.stats.push_back(k_stat);
    const double var_mc = k_stat.variance.value_or(0.0);
    const double se_var = k_stat.se_variance.value_or(0.0);

    rep.notes.push_back({"var-poisson", g17(gap.var_poisson.value)});
    rep.notes.push_back({"var-independent-proxy", g17(gap.var_ind.value)});
    rep.notes.push_back({"gap-poisson-lo", g17(gap.gap_poisson_lo.value)});
    rep.notes.push_back({"gap-poisson-hi", g17(gap.gap_poisson_hi.value)});
    rep.notes.push_back({"gap-binomial-hi", g17(gap.gap_binom_hi.value)});
    rep.notes.push_back({"var-mc-binomial", g17(var_mc)});

    rep.notes.push_back(
        {"gap-poisson-observed", g17(gap.var_poisson.value - gap.var_ind.value)});

    rep.bound_checks.push_back(value_check("var-coverage-upper", "poissonization-gap",
                                           "right", gap.implied_hi(), var_mc,
                                           3.0 * se_var, true));
    rep.bound_checks.push_back(value_check("var-coverage-lower", "poissonization-gap",
                                           "left", gap.implied_lo(), var_mc,
                                           3.0 * se_var, false));
    // deterministic side: the poisson variance exceeds the independence proxy
    // by at most the certified gap
    rep.bound_checks.push_back(value_check(
        "poisson-minus-proxy-var", "poissonization-gap", "right",
        gap.gap_poisson_hi.value, gap.var_poisson.value - gap.var_ind.value,
        gap.gap_poisson_hi.error + gap.var_poisson.error + gap.var_ind.error, true));
    return rep;
}

EnumMoments enumerate_exact(const std::vector<double>& p, int n) {
    require_small_instance(p, n);
    // Extended-precision accumulation: the closed-form counterpart carries
    // long double internally, and matching it near cancellation points
    // (variances that are structurally zero at n = 1) needs the same care.
    long double cov = 0.0L, ek2 = 0.0L, em2 = 0.0L;
    std::vector<long double> cnt(static_cast<size_t>(n) + 1, 0.0L);  // [0] unused
    std::vector<long double> mss(static_cast<size_t>(n) + 1, 0.0L);
    for_each_outcome(p, n, [&](long double w, const std::vector<uint32_t>& counts) {
        uint64_t kn = 0;
        for (uint32_t c : counts) kn += c > 0;
        cov += w * static_cast<long double>(kn);
        ek2 += w * static_cast<long double>(kn) * static_cast<long double>(kn);
        for (int r = 1; r <= n; ++r) {
            uint64_t kr = 0;
            for (uint32_t c : counts) kr += c == static_cast<uint32_t>(r);
            cnt[r] += w * static_cast<long double>(kr);
        }
        for (int r = 0; r <= n; ++r) {
            long double mass = 0.0L;
            for (size_t j = 0; j < p.size(); ++j)
                if (counts[j] == static_cast<uint32_t>(r)) mass += p[j];
            mss[r] += w * mass;
            if (r == 0) em2 += w * mass * mass;
        }
    });
    EnumMoments em;
    em.coverage = static_cast<double>(cov);
    em.count_r.assign(cnt.begin(), cnt.end());
    em.mass_r.assign(mss.begin(), mss.end());
    em.var_coverage = static_cast<double>(ek2 - cov * cov);
    em.var_missing = static_cast<double>(em2 - mss[0] * mss[0]);
    return em;
}

double enum_log_mgf_cumulated(const std::vector<double>& p, int n, uint64_t r,
                              double lambda) {
    require_small_instance(p, n);
    double mean = 0.0;
    for_each_outcome(p, n, [&](double w, const std::vector<uint32_t>& counts) {
        mean += w * static_cast<double>(cumulated_of_counts(counts, r));
    });
    double mgf = 0.0;
    for_each_outcome(p, n, [&](double w, const std::vector<uint32_t>& counts) {
        mgf += w * std::exp(lambda *
                            (static_cast<double>(cumulated_of_counts(counts, r)) - mean));
    });
    return std::log(mgf);
}

double enum_log_mgf_missing(const std::vector<double>& p, int n, double lambda) {
    require_small_instance(p, n);
    double mean = 0.0;
    for_each_outcome(p, n, [&](double w, const std::vector<uint32_t>& counts) {
        mean += w * missing_of(p, counts);
    });
    double mgf = 0.0;
    for_each_outcome(p, n, [&](double w, const std::vector<uint32_t>& counts) {
        mgf += w * std::exp(lambda * (missing_of(p, counts) - mean));
    });
    return std::log(mgf);
}

double poisson_log_mgf_missing(const std::vector<double>& p, double t, double lambda) {
    double log_mgf = 0.0, mean = 0.0;
    for (double pj : p) {
        double a = std::exp(-t * pj);
        log_mgf += std::log1p((std::exp(lambda * pj) - 1.0) * a);
        mean += pj * a;
    }
    return log_mgf - lambda * mean;
}

double poisson_log_mgf_cumulated(const std::vector<double>& p, double t, uint64_t r,
                                 double lambda) {
    double log_mgf = 0.0, mean = 0.0;
    for (double pj : p) {
        double pi = poisson_upper_tail(t * pj, r);
        log_mgf += std::log1p(pi * (std::exp(lambda) - 1.0));
        mean += pi;
    }
    return log_mgf - lambda * mean;
}

double poisson_log_mgf_gt_gap(const std::vector<double>& p, double t, double lambda) {
    // G0 - M0 is centered exactly; each symbol contributes p_j (unseen),
    // -1/t per singleton, and 0 otherwise to M0 - G0
    double log_mgf = 0.0;
    for (double pj : p) {
        double p0 = std::exp(-t * pj);
        double p1 = t * pj * p0;
        double rest = 1.0 - p0 - p1;
        if (rest < 0.0) rest = 0.0;
        log_mgf += std::log(p0 * std::exp(-lambda * pj) + p1 * std::exp(lambda / t) + rest);
    }
    return log_mgf;
}

namespace {

// ---- acceptance criteria ----

bool rel_close(double got, double want, double rel) {
    double scale = std::max(std::fabs(want), 1e-6);
    return std::fabs(got - want) <= rel * scale;
}

std::string pf(bool b) { return b ? "ok" : "FAIL"; }

CriterionResult criterion_enumeration() {
    CriterionResult cr{1, "exact-oracle equivalence on small instances", true, ""};
    struct Inst {
        const char* label;
        std::vector<double> p;
    };
    const std::vector<Inst> insts = {
        {"uniform2", {0.5, 0.5}},
        {"uniform3", {1.0 / 3, 1.0 / 3, 1.0 / 3}},
        {"uniform4", {0.25, 0.25, 0.25, 0.25}},
        {"skew4", {0.55, 0.25, 0.15, 0.05}},
        {"skew2", {0.75, 0.25}},
        {"skew3", {0.6, 0.3, 0.1}},
    };
    double worst = 0.0;
    for (const auto& inst : insts) {
        auto model = make_explicit(inst.p);
        for (int n = 1; n <= 4; ++n) {
            auto em = enumerate_exact(inst.p, n);
            auto track = [&](double got, double want) {
                double scale = std::max(std::fabs(want), 1e-6);
                worst = std::max(worst, std::fabs(got - want) / scale);
            };
            track(expected_coverage(*model, Setting::binomial, n, 1e-12).value,
                  em.coverage);
            for (int r = 1; r <= n; ++r)
                track(expected_count(*model, Setting::binomial, n, r, 1e-12).value,
                      em.count_r[r]);
            for (int r = 0; r <= n; ++r)
                track(expected_mass(*model, Setting::binomial, n, r, 1e-12).value,
                      em.mass_r[r]);
            auto ev = exact_binomial_variances(*model, n);
            track(ev.var_coverage, em.var_coverage);
            track(ev.var_missing, em.var_missing);
        }
    }
    cr.pass = worst <= 1e-10;
    cr.detail = "worst relative deviation " + g17(worst) + " (tolerance 1e-10)";
    return cr;
}

CriterionResult criterion_good_identity() {
    CriterionResult cr{2, "mass-count identity (n+1) E M_{n,0} = E K_{n+1,1}", true, ""};
    double worst = 0.0;
    for (const auto& spec : {"zipf:s=2", "geom:q=0.5", "uniform:k=100"}) {
        auto model = parse_model(spec);
        for (uint64_t n : {1, 10, 100, 1000}) {
            auto lhs = expected_mass(*model, Setting::binomial,
                                     static_cast<double>(n), 0, 1e-12);
            auto rhs = expected_count(*model, Setting::binomial,
                                      static_cast<double>(n + 1), 1, 1e-12);
            double got = static_cast<double>(n + 1) * lhs.value;
            worst = std::max(worst, std::fabs(got - rhs.value) /
                                        std::max(rhs.value, 1e-6));
        }
    }
    cr.pass = worst <= 1e-10;
    cr.detail = "worst relative deviation " + g17(worst) + " (tolerance 1e-10)";
    return cr;
}

CriterionResult criterion_birthday() {
    CriterionResult cr{3, "birthday scenario coverage moments", true, ""};
    auto model = make_uniform(10000);
    auto ek = expected_coverage(*model, Setting::poisson, 100.0, 1e-11);
    auto vk = variance_coverage_poisson(*model, 100.0, 1e-11);
    const double e_lo = 99.5, e_hi = 99.5 + 1.0 / 600.0;
    const double v_lo = 100.0 - 1.0 / 600.0, v_hi = 100.0 + 1.0 / 1200.0;
    bool mean_ok = ek.value >= e_lo && ek.value <= e_hi;
    bool var_ok = vk.value >= v_lo && vk.value <= v_hi;
    cr.pass = mean_ok && var_ok;
    cr.detail = "E K(100) = " + g17(ek.value) + " in [" + g17(e_lo) + ", " + g17(e_hi) +
                "] " + pf(mean_ok) + "; var K(100) = " + g17(vk.value) + " in [" +
                g17(v_lo) + ", " + g17(v_hi) + "] " + pf(var_ok);
    return cr;
}

CriterionResult criterion_sandwich() {
    CriterionResult cr{4, "poisson coverage variance sandwich", true, ""};
    double worst_margin = 1.0;
    std::string worst_at = "none";
    for (const auto& spec :
         {"uniform:k=100", "zipf:s=2", "geom:q=0.5", "sqrtgeom:q=0.5", "fastvar"}) {
        auto model = parse_model(spec);
        for (double t : {100.0, 10000.0}) {
            auto var = variance_coverage_poisson(*model, t, 1e-10);
            auto lo = expected_count(*model, Setting::poisson, 2.0 * t, 1, 1e-10);
            auto hi = expected_count(*model, Setting::poisson, t, 1, 1e-10);
            double m1 = var.value + var.error - 0.5 * (lo.value - lo.error);
            double m2 = hi.value + hi.error - (var.value - var.error);
            double margin = std::min(m1, m2);
            if (margin < worst_margin) {
                worst_margin = margin;
                worst_at = std::string(spec) + "@t=" + g17(t);
            }
            if (margin < 0.0) cr.pass = false;
        }
    }
    cr.detail = "tightest slack " + g17(worst_margin) + " at " + worst_at;
    return cr;
}

CriterionResult criterion_missing_variance_mc(uint64_t seed, int jobs) {
    CriterionResult cr{5, "exact poisson missing-mass variance vs Monte Carlo", true, ""};
    std::string parts;
    int idx = 0;
    for (const auto& spec : {"zipf:s=2", "geom:q=0.5"}) {
        auto model = parse_model(spec);
        auto exact = variance_missing_mass_poisson(*model, 1e4, 1e-11);
        auto tab = run_replicates_raw(model, Setting::poisson, 1e4, 10000,
                                      block_seed(seed, 50 + idx), jobs);
        auto st = make_stat("m0", tab.m0);
        double var_mc = st.variance.value_or(0.0);
        double se = st.se_variance.value_or(0.0);
        bool ok = std::fabs(var_mc - exact.value) <= 3.0 * se + exact.error;
        if (!ok) cr.pass = false;
        parts += std::string(spec) + ": exact=" + g17(exact.value) +
                 " mc=" + g17(var_mc) + " 3se=" + g17(3.0 * se) + " " + pf(ok) + "; ";
        ++idx;
    }
    cr.detail = parts;
    return cr;
}

CriterionResult criterion_log_mgf_dominance() {
    CriterionResult cr{6, "log-MGF dominance on exhaustive instances", true, ""};
    struct Inst {
        std::vector<double> p;
        int n;
    };
    const std::vector<Inst> insts = {
        {{0.5, 0.5}, 2},
        {{0.5, 0.5}, 4},
        {{1.0 / 3, 1.0 / 3, 1.0 / 3}, 3},
        {{0.55, 0.25, 0.15, 0.05}, 4},
        {{0.8, 0.2}, 3},
    };
    double worst = -1e300;
    std::string worst_at = "none";
    auto track = [&](double exact, double bound, const std::string& label) {
        double excess = exact - bound;
        if (excess > worst) {
            worst = excess;
            worst_at = label;
        }
        if (excess > 1e-12) cr.pass = false;
    };
    for (const auto& inst : insts) {
        auto model = make_explicit(inst.p);
        const double n = inst.n;
        auto mrep = build_moment_report(*model, Setting::binomial, n, 3, 1e-11);
        auto vrep = build_variance_report(*model, n, 1e-11);
        std::string tag = "support" + std::to_string(inst.p.size()) + "-n" +
                          std::to_string(inst.n);

        for (uint64_t r : {uint64_t{1}, uint64_t{2}}) {
            auto spec = knrbar_bound(mrep, r);
            for (double lam : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0})
                track(enum_log_mgf_cumulated(inst.p, inst.n, r, lam),
                      spec.log_mgf_bound(lam),
                      tag + "/cumulated-r" + std::to_string(r));
        }
        for (const auto& spec : missing_mass_bounds(vrep)) {
            if (spec.side == BoundSide::left) {
                for (double lam : {0.25, 0.5, 1.0, 2.0, 4.0})
                    track(enum_log_mgf_missing(inst.p, inst.n, -lam),
                          spec.log_mgf_bound(lam), tag + "/missing-left");
            } else {
                for (double lam : {0.25, 0.5, 1.0, 2.0}) {
                    double cap = spec.c > 0.0 ? 0.95 / spec.c : lam;
                    double use = std::min(lam * n / 4.0, cap);
                    if (!spec.valid_lambda(use)) continue;
                    track(enum_log_mgf_missing(inst.p, inst.n, use),
                          spec.log_mgf_bound(use), tag + "/missing-right");
                }
            }
        }
        auto prep = build_moment_report(*model, Setting::poisson, n, 3, 1e-11);
        for (const auto& spec : gt_gap_bounds(prep)) {
            for (double lam : {0.25, 0.5, 1.0, 2.0}) {
                double use = spec.side == BoundSide::left
                                 ? std::min(lam * n / 4.0, 0.95 * n)
                                 : lam * n / 4.0;
                if (!spec.valid_lambda(use)) continue;
                double sign = spec.side == BoundSide::left ? -1.0 : 1.0;
                track(poisson_log_mgf_gt_gap(inst.p, n, sign * use),
                      spec.log_mgf_bound(use),
                      tag + "/gt-gap-" + side_name(spec.side));
            }
        }
    }
    cr.detail = "max excess over any certificate " + g17(worst) + " at " + worst_at;
    return cr;
}

CriterionResult criterion_tail_bounds(uint64_t seed, int jobs) {
    CriterionResult cr{7, "tail-bound domination at n = 10^4", true, ""};
    std::string parts;
    int idx = 0;
    for (const auto& spec : {"zipf:s=2", "sqrtgeom:q=0.5"}) {
        auto rep = check_tail_bounds(parse_model(spec), Setting::binomial, 1e4, 10000,
                                     block_seed(seed, 70 + idx), {}, jobs);
        uint64_t failed = 0;
        for (const auto& b : rep.bound_checks) failed += !b.pass;
        bool ok = failed == 0;
        if (!ok) cr.pass = false;
        parts += std::string(spec) + ": " + std::to_string(rep.bound_checks.size()) +
                 " checks, " + std::to_string(failed) + " failed " + pf(ok) + "; ";
        ++idx;
    }
    cr.detail = parts;
    return cr;
}

CriterionResult criterion_proxy_tightness(uint64_t seed, int jobs) {
    CriterionResult cr{8, "variance-proxy tightness under regular variation", true, ""};
    auto model = parse_model("zipf:s=2");
    auto vrep = build_variance_report(*model, 1e6, 1e-9);
    double ratio_pm = vrep.v_minus.value / vrep.v_plus.value;
    bool ok1 = std::fabs(ratio_pm - 0.25) <= 0.05;

    auto tab = run_replicates_raw(model, Setting::binomial, 1e6, 10000,
                                  block_seed(seed, 80), jobs);
    auto st = make_stat("m0", tab.m0);
    double var_mc = st.variance.value_or(0.0);
    double ratio_var = vrep.v_minus.value / var_mc;
    const double target = 1.0 / (1.0 - std::pow(2.0, 0.5 - 2.0));
    bool ok2 = std::fabs(ratio_var / target - 1.0) <= 0.25;

    cr.pass = ok1 && ok2;
    cr.detail = "v-/v+ = " + g17(ratio_pm) + " vs 0.25 +- 0.05 " + pf(ok1) +
                "; v-/var_mc = " + g17(ratio_var) + " vs " + g17(target) +
                " +- 25% " + pf(ok2);
    return cr;
}

CriterionResult criterion_ci_coverage(uint64_t seed, int jobs) {
    CriterionResult cr{9, "poisson CI coverage at delta = 0.025", true, ""};
    auto rep = check_ci_coverage(parse_model("zipf:s=2"), 1e4, 0.025, 10000,
                                 block_seed(seed, 90), jobs);
    cr.pass = rep.coverage && rep.coverage->pass;
    if (rep.coverage)
        cr.detail = "coverage " + g17(rep.coverage->coverage) + " vs target " +
                    g17(rep.coverage->target) + " - " + g17(rep.coverage->slack);
    return cr;
}

CriterionResult criterion_clt(uint64_t seed, int jobs) {
    CriterionResult cr{10, "ratio CLT at t = 10^6", true, ""};
    auto rep = check_clt(parse_model("zipf:s=2"), 1e6, 10000, block_seed(seed, 100),
                         jobs);
    cr.pass = rep.ks && rep.ks->pass;
    if (rep.ks)
        cr.detail = "KS statistic " + g17(rep.ks->statistic) + ", p = " +
                    g17(rep.ks->p_value) + " (level 0.01)";
    else
        cr.detail = "KS skipped";
    return cr;
}

CriterionResult criterion_karlin() {
    CriterionResult cr{11, "regime equivalents at n = 10^6", true, ""};
    std::string parts;

    auto zm = parse_model("zipf:s=2");
    auto zrep = build_moment_report(*zm, Setting::binomial, 1e6, 3, 1e-9);
    auto zpred = karlin_asymptotics(*zm, 1e6, 3);
    double zr[4] = {zrep.coverage.value / zpred.coverage,
                    zrep.count_r[1].value / zpred.count_r[1],
                    zrep.count_r[2].value / zpred.count_r[2],
                    zrep.cumulated_r[2].value / zpred.cumulated_r[2]};
    bool zok = true;
    for (double r : zr) zok = zok && std::fabs(r - 1.0) <= 0.05;
    parts += "zipf ratios K/K1/K2/K2bar = " + g17(zr[0]) + "/" + g17(zr[1]) + "/" +
             g17(zr[2]) + "/" + g17(zr[3]) + " within 5% " + pf(zok) + "; ";

    auto fm = parse_model("fastvar");
    auto frep = build_moment_report(*fm, Setting::binomial, 1e6, 2, 1e-9);
    auto fpred = karlin_asymptotics(*fm, 1e6, 2);
    double fr[3] = {frep.coverage.value / fpred.coverage,
                    frep.count_r[1].value / fpred.count_r[1],
                    frep.count_r[2].value / fpred.count_r[2]};
    bool fok = true;
    for (double r : fr) fok = fok && std::fabs(r - 1.0) <= 0.15;
    parts += "fast-variation K/K1/K2 ratios = " + g17(fr[0]) + "/" + g17(fr[1]) + "/" +
             g17(fr[2]) + " within 15% " + pf(fok) + "; ";

    auto sm = parse_model("sqrtgeom:q=0.5");
    auto srep = build_moment_report(*sm, Setting::binomial, 1e6, 3, 1e-9);
    auto spred = karlin_asymptotics(*sm, 1e6, 3);
    bool sok = true;
    std::string sr_txt;
    for (int r = 1; r <= 3; ++r) {
        double ratio = srep.count_r[r].value / spred.count_r[r];
        sok = sok && std::fabs(ratio - 1.0) <= 0.20;
        sr_txt += (r > 1 ? "/" : "") + g17(ratio);
    }
    parts += "slow-variation K1..K3 ratios = " + sr_txt + " within 20% " + pf(sok);

    cr.pass = zok && fok && sok;
    cr.detail = parts;
    return cr;
}

CriterionResult criterion_alpha_species(uint64_t seed, int jobs) {
    CriterionResult cr{12, "index estimate and species forecast", true, ""};
    auto model = parse_model("zipf:s=2");
    SamplerTable table(model);

    SampleWorkspace ws0(table);
    xoshiro256pp rng0(derive_seed(block_seed(seed, 120), 0));
    auto single = run_replicate(table, ws0, Setting::binomial, 1e6, rng0);
    double ahat = static_cast<double>(single.k_r[1]) / static_cast<double>(single.distinct);
    bool ok1 = std::fabs(ahat - 0.5) < 0.05;

    const uint64_t Rp = 100;
    const uint64_t n = 1000000;
    std::vector<double> preds(Rp), realized(Rp);
    parallel_replicates(table, Rp, block_seed(seed, 121), jobs,
                        [&](uint64_t k, SampleWorkspace& ws, xoshiro256pp& rng) {
                            ws.reset();
                            ws.run_draws(table, n, rng);
                            auto at_n = ws.summarize(table.model());
                            double a = static_cast<double>(at_n.k_r[1]) /
                                       static_cast<double>(at_n.distinct);
                            preds[k] = (std::pow(2.0, a) - 1.0) / a *
                                       static_cast<double>(at_n.k_r[1]);
                            ws.run_draws(table, n, rng);
                            auto at_2n = ws.summarize(table.model());
                            realized[k] = static_cast<double>(at_2n.distinct) -
                                          static_cast<double>(at_n.distinct);
                        });
    auto pred_stat = make_stat("pred", preds);
    auto real_stat = make_stat("realized", realized);
    double rel = std::fabs(pred_stat.mean / real_stat.mean - 1.0);
    bool ok2 = rel <= 0.10;

    cr.pass = ok1 && ok2;
    cr.detail = "single-replicate alpha = " + g17(ahat) + " " + pf(ok1) +
                "; forecast mean " + g17(pred_stat.mean) + " vs realized mean " +
                g17(real_stat.mean) + " (rel err " + g17(rel) + ", cap 10%) " + pf(ok2);
    return cr;
}

CriterionResult criterion_lighttail(uint64_t seed, int jobs) {
    CriterionResult cr{13, "light-tail pathologies", true, ""};
    auto rep = experiment_lighttail(0.05, {1000, 10000, 100000}, 10000,
                                    block_seed(seed, 130), jobs);
    bool blind_ok = false, two_ok = false;
    double blind = 0.0, two = 0.0;
    for (const auto& b : rep.bound_checks) {
        if (b.quantity == "gt-blind-nonzero") {
            blind_ok = b.pass;
            blind = b.exceedance;
        }
        if (b.quantity.rfind("two-point-mass", 0) == 0) {
            two_ok = b.pass;
            two = b.exceedance;
        }
    }
    cr.pass = blind_ok && two_ok;
    cr.detail = "max freq(G=0, M>0) = " + g17(blind) + " need > 0 " + pf(blind_ok) +
                "; two-point mass = " + g17(two) + " need >= 0.95 " + pf(two_ok);
    return cr;
}

CriterionResult criterion_determinism(uint64_t seed, int jobs) {
    (void)jobs;
    CriterionResult cr{14, "byte-identical reports across re-runs and worker counts",
                       true, ""};
    auto model = parse_model("zipf:s=2");
    uint64_t s = block_seed(seed, 140);
    auto a = mc_report_json(run_replicates(model, Setting::binomial, 1000, 400, s, 1));
    auto b = mc_report_json(run_replicates(model, Setting::binomial, 1000, 400, s, 4));
    auto c = mc_report_json(run_replicates(model, Setting::binomial, 1000, 400, s, 1));
    auto ta = check_tail_bounds(model, Setting::binomial, 1000, 400, s, {}, 1);
    auto tb = check_tail_bounds(model, Setting::binomial, 1000, 400, s, {}, 3);
    bool ok = a == b && a == c && mc_report_csv(ta) == mc_report_csv(tb) &&
              mc_report_json(ta) == mc_report_json(tb);
    cr.pass = ok;
    cr.detail = ok ? "replicate and tail-bound reports identical for jobs in {1,3,4}"
                   : "reports differ across runs";
    return cr;
}

} // namespace

std::vector<CriterionResult> acceptance_suite(uint64_t seed, int jobs) {
    std::vector<CriterionResult> out;
    out.push_back(criterion_enumeration());
    out.push_back(criterion_good_identity());
    out.push_back(criterion_birthday());
    out.push_back(criterion_sandwich());
    out.push_back(criterion_missing_variance_mc(seed, jobs));
    out.push_back(criterion_log_mgf_dominance());
    out.push_back(criterion_tail_bounds(seed, jobs));
    out.push_back(criterion_proxy_tightness(seed, jobs));
    out.push_back(criterion_ci_coverage(seed, jobs));
    out.push_back(criterion_clt(seed, jobs));
    out.push_back(criterion_karlin());
    out.push_back(criterion_alpha_species(seed, jobs));
    out.push_back(criterion_lighttail(seed, jobs));
    out.push_back(criterion_determinism(seed, jobs));
    return out;
}

const std::vector<ExperimentInfo>& experiment_registry() {
    static const std::vector<ExperimentInfo> registry = {
        {"replicates", "occupancy-moment-statistics",
         "means and variances of K, K_r, M0, G0 over seeded replicates"},
        {"tail-bounds", "bernstein-bennett-subgamma",
         "empirical exceedance vs concentration certificates on an s grid"},
        {"ci-coverage", "good-turing-poisson-interval",
         "coverage of the missing-mass confidence interval at level 1-4delta"},
        {"clt", "ratio-normality-kolmogorov-smirnov",
         "KS test of the standardized Good-Turing ratio against a normal"},
        {"lighttail", "geometric-two-point-pathologies",
         "max-vs-coverage domination, two-point missing mass, estimator blind spots"},
        {"asymptotics", "karlin-regime-equivalents",
         "exact moments vs regime predictions vs realizations along an n grid"},
        {"poissonization", "fixed-n-vs-poisson-variance",
         "Monte Carlo binomial coverage variance inside the implied interval"},
    };
    return registry;
}

} // namespace urnlab
