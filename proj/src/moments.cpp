#include "urnlab/moments.hpp"

#include <cmath>
#include <stdexcept>

#include "urnlab/numerics.hpp"

namespace urnlab {

namespace {

// head/tail split point: beyond J every symbol has (n or t) * p below eta, so
// the alternating tail series contract by at least eta/(m+1) per order
constexpr double kEta = 0.25;

uint64_t split_index(const FrequencyModel& m, double nt) {
    double x = kEta / nt;
    if (x >= 1.0) return 0;
    return m.counting_function(x);
}

struct PowerSumCache {
    const FrequencyModel& model;
    uint64_t J;
    std::vector<certified> vals;
    std::vector<bool> have;

    PowerSumCache(const FrequencyModel& mm, uint64_t j) : model(mm), J(j) {}

    certified get(int m) {
        if (m >= static_cast<int>(vals.size())) {
            vals.resize(m + 1);
            have.resize(m + 1, false);
        }
        if (!have[m]) {
            vals[m] = model.power_sum(m, J);
            have[m] = true;
        }
        return vals[m];
    }
};

template <typename TermFn>
certified head_sum(const FrequencyModel& m, uint64_t J, TermFn term) {
    long double acc = 0.0L, mag = 0.0L;
    for (uint64_t j = 1; j <= J; ++j) {
        double t = term(m.prob(j));
        acc += t;
        mag += std::fabs(t);
    }
    return {static_cast<double>(acc), 5e-16 * static_cast<double>(mag)};
}

// alternating tail series sum_{m>=m0} sign_0 (-1)^{m-m0} exp(log_coef(m)) S_{shift+m};
// log_coef returning -inf terminates the series exactly
template <typename LogCoef>
certified tail_series(PowerSumCache& cache, int m0, int shift, double sign0,
                      LogCoef log_coef, double tol) {
    certified out;
    double sign = sign0;
    for (int m = m0; m < m0 + 400; ++m) {
        double lc = log_coef(m);
        if (lc == -std::numeric_limits<double>::infinity()) return out;
        certified S = cache.get(shift + m);
        if (S.value <= 0.0 && S.error <= 0.0) return out;
        double term = S.value > 0.0 ? std::exp(lc + std::log(S.value)) : 0.0;
        out.error += S.error > 0.0 ? std::exp(lc + std::log(S.error)) : 0.0;
        if (term <= tol) {
            out.error += term;  // first omitted term bounds the remainder
            return out;
        }
        out.value += sign * term;
        sign = -sign;
    }
    // cap never reached with the eta contract; certify defensively anyway
    out.error += std::exp(log_coef(m0 + 400));
    return out;
}

double log_binom_checked(double n, double k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    return log_binomial(n, k);
}

// P(X >= r) for X ~ Binomial(n, p) or Poisson(tp), chosen branch avoids
// cancellation: complement of a small cdf when the mean clears r, otherwise a
// short upward sum of the pmf
certified expected_count_tail_only(const FrequencyModel& m, Setting st, double nt,
                                   uint64_t r, uint64_t J, double tol);

double upper_tail_prob(Setting st, double nt, double p, uint64_t r) {
    double mean = nt * p;
    auto pmf0 = [&]() {
        return st == Setting::binomial ? std::exp(nt * std::log1p(-p))
                                       : std::exp(-mean);
    };
    auto ratio = [&](uint64_t i) {
        // pmf(i+1)/pmf(i)
        return st == Setting::binomial
                   ? (nt - static_cast<double>(i)) / (static_cast<double>(i) + 1.0) *
                         (p / (1.0 - p))
                   : mean / (static_cast<double>(i) + 1.0);
    };
    if (mean >= static_cast<double>(r)) {
        double cdf = 0.0, pmf = pmf0();
        for (uint64_t i = 0; i < r && pmf > 0.0; ++i) {
            cdf += pmf;
            pmf *= ratio(i);
        }
        return cdf < 1.0 ? 1.0 - cdf : 0.0;
    }
    // climb to r in log space, then sum upward
    double lp;
    if (st == Setting::binomial) {
        lp = log_binom_checked(nt, static_cast<double>(r));
        if (lp == -std::numeric_limits<double>::infinity()) return 0.0;
        lp += r * std::log(p) + (nt - static_cast<double>(r)) * std::log1p(-p);
    } else {
        lp = -mean + r * std::log(mean) - lgamma_fn(static_cast<double>(r) + 1.0);
    }
    if (lp == -std::numeric_limits<double>::infinity()) return 0.0;
    double pmf = std::exp(lp), acc = 0.0;
    for (uint64_t i = r; i < r + 500; ++i) {
        acc += pmf;
        if (st == Setting::binomial && static_cast<double>(i) >= nt) break;
        pmf *= ratio(i);
        if (pmf < 1e-22 * (acc + 1e-300)) break;
    }
    return acc;
}

} // namespace

certified expected_coverage(const FrequencyModel& m, Setting st, double nt, double eps) {
    if (!(nt >= 0.0)) throw std::domain_error("expected_coverage: need nt >= 0");
    if (nt == 0.0) return {0.0, 0.0};
    uint64_t J = split_index(m, nt);
    certified head =
        st == Setting::binomial
            ? head_sum(m, J, [nt](double p) { return -std::expm1(nt * std::log1p(-p)); })
            : head_sum(m, J, [nt](double p) { return -std::expm1(-nt * p); });
    PowerSumCache cache(m, J);
    double tol = eps / 40.0;
    certified tail =
        st == Setting::binomial
            ? tail_series(cache, 1, 0, +1.0,
                          [nt](int mm) { return log_binom_checked(nt, mm); }, tol)
            : tail_series(
                  cache, 1, 0, +1.0,
                  [nt](int mm) { return mm * std::log(nt) - lgamma_fn(mm + 1.0); }, tol);
    return head + tail;
}

certified expected_count(const FrequencyModel& m, Setting st, double nt, uint64_t r,
                         double eps) {
    if (r < 1) throw std::invalid_argument("expected_count: need r >= 1");
    if (!(nt >= 0.0)) throw std::domain_error("expected_count: need nt >= 0");
    if (nt == 0.0) return {0.0, 0.0};
    uint64_t J = split_index(m, nt);
    double rr = static_cast<double>(r);
    certified head;
    if (st == Setting::binomial) {
        if (rr > nt) return {0.0, 0.0};
        double lb = log_binomial(nt, rr);
        head = head_sum(m, J, [nt, rr, lb](double p) {
            return std::exp(lb + rr * std::log(p) + (nt - rr) * std::log1p(-p));
        });
    } else {
        double lg = lgamma_fn(rr + 1.0);
        head = head_sum(m, J, [nt, rr, lg](double p) {
            return std::exp(-nt * p + rr * std::log(nt * p) - lg);
        });
    }
    PowerSumCache cache(m, J);
    double tol = eps / 40.0;
    certified tail;
    if (st == Setting::binomial) {
        double lb = log_binomial(nt, rr);
        tail = tail_series(
            cache, 0, static_cast<int>(r), +1.0,
            [nt, rr, lb](int mm) { return lb + log_binom_checked(nt - rr, mm); }, tol);
    } else {
        double base = rr * std::log(nt) - lgamma_fn(rr + 1.0);
        tail = tail_series(
            cache, 0, static_cast<int>(r), +1.0,
            [nt, base](int mm) { return base + mm * std::log(nt) - lgamma_fn(mm + 1.0); },
            tol);
    }
    return head + tail;
}

certified expected_mass(const FrequencyModel& m, Setting st, double nt, uint64_t r,
                        double eps) {
    if (!(nt >= 0.0)) throw std::domain_error("expected_mass: need nt >= 0");
    if (nt == 0.0) return m.tail_mass(0);
    uint64_t J = split_index(m, nt);
    double rr = static_cast<double>(r);
    certified head;
    if (st == Setting::binomial) {
        if (rr > nt) return {0.0, 0.0};
        double lb = log_binomial(nt, rr);
        head = head_sum(m, J, [nt, rr, lb](double p) {
            return p * std::exp(lb + rr * std::log(p) + (nt - rr) * std::log1p(-p));
        });
    } else {
        double lg = lgamma_fn(rr + 1.0);
        head = head_sum(m, J, [nt, rr, lg](double p) {
            return p * std::exp(-nt * p + rr * std::log(nt * p) - lg);
        });
    }
    PowerSumCache cache(m, J);
    double tol = eps / 40.0;
    certified tail;
    if (st == Setting::binomial) {
        double lb = log_binomial(nt, rr);
        tail = tail_series(
            cache, 0, static_cast<int>(r) + 1, +1.0,
            [nt, rr, lb](int mm) { return lb + log_binom_checked(nt - rr, mm); }, tol);
    } else {
        double base = rr * std::log(nt) - lgamma_fn(rr + 1.0);
        tail = tail_series(
            cache, 0, static_cast<int>(r) + 1, +1.0,
            [nt, base](int mm) { return base + mm * std::log(nt) - lgamma_fn(mm + 1.0); },
            tol);
    }
    return head + tail;
}

certified expected_cumulated(const FrequencyModel& m, Setting st, double nt, uint64_t r,
                             double eps) {
    if (r < 1) throw std::invalid_argument("expected_cumulated: need r >= 1");
    if (!(nt >= 0.0)) throw std::domain_error("expected_cumulated: need nt >= 0");
    if (nt == 0.0) return {0.0, 0.0};
    uint64_t J = split_index(m, nt);
    certified head =
        head_sum(m, J, [st, nt, r](double p) { return upper_tail_prob(st, nt, p, r); });
    // tail: sum the per-count tails over i >= r; each order contracts by at
    // least eta/(i+1), so the remainder is certified geometrically
    certified total = head;
    double tol = eps / 40.0;
    for (uint64_t i = r; i < r + 400; ++i) {
        if (st == Setting::binomial && static_cast<double>(i) > nt) break;
        certified ci = expected_count_tail_only(m, st, nt, i, J, tol);
        total += ci;
        double mag = ci.value + ci.error;
        if (mag <= tol) {
            total.error += mag * 0.5;  // ratio <= eta/(i+1) <= 1/4 from here on
            break;
        }
    }
    return total;
}

namespace {

// tail-only part of expected_count at a fixed split
certified expected_count_tail_only(const FrequencyModel& m, Setting st, double nt,
                                   uint64_t r, uint64_t J, double tol) {
    PowerSumCache cache(m, J);
    double rr = static_cast<double>(r);
    if (st == Setting::binomial) {
        if (rr > nt) return {0.0, 0.0};
        double lb = log_binomial(nt, rr);
        return tail_series(
            cache, 0, static_cast<int>(r), +1.0,
            [nt, rr, lb](int mm) { return lb + log_binom_checked(nt - rr, mm); }, tol);
    }
    double base = rr * std::log(nt) - lgamma_fn(rr + 1.0);
    return tail_series(
        cache, 0, static_cast<int>(r), +1.0,
        [nt, base](int mm) { return base + mm * std::log(nt) - lgamma_fn(mm + 1.0); },
        tol);
}

} // namespace

certified variance_coverage_poisson(const FrequencyModel& m, double t, double eps) {
    certified two = expected_coverage(m, Setting::poisson, 2.0 * t, eps / 2.0);
    certified one = expected_coverage(m, Setting::poisson, t, eps / 2.0);
    two -= one;
    return two;
}

certified variance_missing_mass_poisson(const FrequencyModel& m, double t, double eps) {
    certified k2t = expected_count(m, Setting::poisson, t, 2, eps * t * t / 4.0);
    certified k2_2t = expected_count(m, Setting::poisson, 2.0 * t, 2, eps * t * t / 4.0);
    certified out = (2.0 / (t * t)) * k2t;
    out -= (0.5 / (t * t)) * k2_2t;
    return out;
}

MomentReport build_moment_report(const FrequencyModel& m, Setting st, double nt,
                                 int rmax, double eps) {
    MomentReport rep;
    rep.model_spec = m.spec_string();
    rep.setting = st;
    rep.nt = nt;
    rep.epsilon = eps;
    rep.rmax = rmax;
    rep.coverage = expected_coverage(m, st, nt, eps);
    rep.count_r.assign(rmax + 1, certified{});
    rep.cumulated_r.assign(rmax + 1, certified{});
    rep.mass_r.assign(rmax + 1, certified{});
    rep.mass_r[0] = expected_mass(m, st, nt, 0, eps);
    for (int r = 1; r <= rmax; ++r) {
        rep.count_r[r] = expected_count(m, st, nt, r, eps);
        rep.cumulated_r[r] = expected_cumulated(m, st, nt, r, eps);
        rep.mass_r[r] = expected_mass(m, st, nt, r, eps);
    }
    rep.coverage_2 = expected_coverage(m, st, 2.0 * nt, eps);
    rep.count1_2 = expected_count(m, st, 2.0 * nt, 1, eps);
    rep.count2_2 = expected_count(m, st, 2.0 * nt, 2, eps);
    return rep;
}

VarianceReport build_variance_report(const FrequencyModel& m, double n, double eps) {
    VarianceReport rep;
    rep.model_spec = m.spec_string();
    rep.setting = Setting::binomial;
    rep.nt = n;
    rep.var_coverage_poisson = variance_coverage_poisson(m, n, eps);
    rep.var_missing_poisson = variance_missing_mass_poisson(m, n, eps);
    rep.sandwich_lo = 0.5 * expected_count(m, Setting::poisson, 2.0 * n, 1, eps);
    rep.sandwich_hi = expected_count(m, Setting::poisson, n, 1, eps);
    rep.v_minus = (2.0 / (n * n)) * expected_count(m, Setting::poisson, n, 2, eps * n * n);
    rep.v_plus =
        (2.0 / (n * n)) * expected_cumulated(m, Setting::poisson, n, 2, eps * n * n);

    // w_n = sum_j p_j^2 / (2 c_ls((1-p_j)^n)): exact head where n p >= eta_w,
    // then a bracket [0, S_2(Jw)/(2 (log(1/(n p)) - 0.29))] on the tail
    {
        const double eta_w = 1e-4;
        double x = eta_w / n;
        uint64_t Jw = x >= 1.0 ? 0 : m.counting_function(x);
        certified head = head_sum(m, Jw, [n](double p) {
            if (p >= 1.0) return 0.0;
            double lq = n * std::log1p(-p);
            double q = std::exp(lq);
            // below 1e-12 the argument of atanh inside c_ls rounds to 1;
            // switch to the limit c_ls(q) -> log(1/q)
            if (q >= 1e-12 && q < 1.0) return p * p / (2.0 * c_ls(q));
            if (lq < 0.0) return p * p / (-2.0 * lq);
            return 0.0;
        });
        certified s2 = m.power_sum(2, Jw);
        double denom = 2.0 * (std::log(1.0 / eta_w) - 0.29);
        double bound = (s2.value + s2.error) / denom;
        rep.w_n = head;
        rep.w_n.value += 0.5 * bound;
        rep.w_n.error += 0.5 * bound;
    }

    rep.var_ind = expected_coverage(m, Setting::binomial, 2.0 * n, eps);
    rep.var_ind -= expected_coverage(m, Setting::binomial, n, eps);

    const RvMeta* meta = m.rv_meta();
    if (meta && meta->de_haan && meta->aux_a) {
        double a = meta->aux_a(n);
        rep.v_slow = certified{12.0 * a / (n * n), 1e-14 * a / (n * n)};
    }
    return rep;
}

ExactBinomialVariances exact_binomial_variances(const FrequencyModel& m, uint64_t n) {
    auto sup = m.support_size();
    if (!sup || *sup > 4096) {
        throw std::domain_error("exact_binomial_variances: needs support <= 4096");
    }
    size_t K = static_cast<size_t>(*sup);
    // Extended precision throughout: at small n the variance of the coverage
    // count cancels to (near) zero, and double-precision exp/log1p residues
    // would survive the cancellation at ~1e-16 scale.
    long double nn = static_cast<long double>(n);
    std::vector<long double> p(K), a(K);
    for (size_t i = 0; i < K; ++i) {
        p[i] = static_cast<long double>(m.prob(i + 1));
        a[i] = p[i] < 1.0L ? std::exp(nn * std::log1p(-p[i])) : 0.0L;
    }
    long double var_k = 0.0L, var_m = 0.0L;
    for (size_t i = 0; i < K; ++i) {
        var_k += a[i] * (1.0L - a[i]);
        var_m += p[i] * p[i] * a[i] * (1.0L - a[i]);
        for (size_t j = 0; j < K; ++j) {
            if (j == i) continue;
            long double both = p[i] + p[j] < 1.0L
                                   ? std::exp(nn * std::log1p(-(p[i] + p[j])))
                                   : 0.0L;
            long double cov = both - a[i] * a[j];
            var_k += cov;
            var_m += p[i] * p[j] * cov;
        }
    }
    return {static_cast<double>(var_k), static_cast<double>(var_m)};
}

PoissonizationGap poissonization_gap(const FrequencyModel& m, uint64_t n, double eps) {
    PoissonizationGap g;
    double nn = static_cast<double>(n);
    g.var_poisson = variance_coverage_poisson(m, nn, eps);
    g.var_ind = expected_coverage(m, Setting::binomial, 2.0 * nn, eps);
    g.var_ind -= expected_coverage(m, Setting::binomial, nn, eps);
    g.gap_poisson_lo = (1.0 / nn) * expected_count(m, Setting::poisson, 2.0 * nn, 2, eps * nn);
    g.gap_poisson_hi = (2.0 / nn) * expected_count(m, Setting::poisson, nn, 2, eps * nn);
    certified k1 = expected_count(m, Setting::binomial, nn, 1, eps);
    certified k2_2n = expected_count(m, Setting::binomial, 2.0 * nn, 2, eps);
    double hi = k1.value * k1.value / nn - k2_2n.value / (2.0 * nn - 1.0);
    double hi_err = 2.0 * k1.value * k1.error / nn + k2_2n.error / (2.0 * nn - 1.0);
    g.gap_binom_hi = {hi, hi_err};
    return g;
}

KarlinPrediction karlin_asymptotics(const FrequencyModel& m, double n, int rmax) {
    const RvMeta* meta = m.rv_meta();
    if (!meta) throw std::domain_error("karlin_asymptotics: model has no growth metadata");
    double alpha = meta->alpha;
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::domain_error("karlin_asymptotics: alpha outside [0,1]");
    }
    KarlinPrediction pred;
    pred.count_r.assign(rmax + 1, 0.0);
    pred.cumulated_r.assign(rmax + 1, 0.0);

    if (alpha == 1.0) {
        if (!meta->ell1 || !meta->ell) {
            throw std::domain_error("karlin_asymptotics: alpha = 1 needs ell and ell1");
        }
        double nl1 = n * meta->ell1(n);
        double nl = n * meta->ell(n);  // = nu(1/n)
        pred.coverage = nl1;
        for (int r = 1; r <= rmax; ++r) {
            pred.count_r[r] = r == 1 ? nl1 : nl / (static_cast<double>(r) * (r - 1.0));
            pred.cumulated_r[r] = r == 1 ? nl1 : nl / (r - 1.0);
        }
        pred.var_missing = meta->ell(n) / (2.0 * n);
        return pred;
    }
    if (alpha == 0.0) {
        if (!meta->ell || !meta->aux_a) {
            throw std::domain_error("karlin_asymptotics: alpha = 0 needs ell and aux_a");
        }
        double l = meta->ell(n);
        double a = meta->aux_a(n);
        pred.coverage = l;
        for (int r = 1; r <= rmax; ++r) {
            pred.count_r[r] = a / r;
            pred.cumulated_r[r] = l;
        }
        pred.var_missing = 3.0 * a / (4.0 * n * n);
        return pred;
    }
    double l = meta->ell(n);
    double na = std::pow(n, alpha) * l;  // ~ nu(1/n)
    pred.coverage = gamma_fn(1.0 - alpha) * na;
    for (int r = 1; r <= rmax; ++r) {
        double rr = static_cast<double>(r);
        pred.count_r[r] = alpha * gamma_fn(rr - alpha) / std::exp(lgamma_fn(rr + 1.0)) * na;
        pred.cumulated_r[r] = gamma_fn(rr - alpha) / std::exp(lgamma_fn(rr)) * na;
    }
    pred.var_missing =
        alpha * gamma_fn(2.0 - alpha) * (1.0 - std::pow(2.0, alpha - 2.0)) *
        std::pow(n, alpha - 2.0) * l;
    return pred;
}

std::optional<double> relative_fluctuation(const FrequencyModel& m, double n, double eps) {
    certified mass = expected_mass(m, Setting::binomial, n, 0, eps);
    if (mass.value <= mass.error) return std::nullopt;
    certified k2 = expected_count(m, Setting::poisson, n, 2, eps * n * n);
    double v_minus = 2.0 * k2.value / (n * n);
    return std::sqrt(v_minus) / mass.value;
}

} // namespace urnlab
