#include "urnlab/bounds.hpp"

#include <cmath>
#include <stdexcept>

#include "urnlab/numerics.hpp"

namespace urnlab {

double BoundSpec::radius(double s) const {
    if (s < 0.0) throw std::domain_error("radius: need s >= 0");
    switch (kind) {
        case BoundKind::sub_gaussian:
            return std::sqrt(2.0 * v * s);
        case BoundKind::sub_poisson:
            return std::sqrt(2.0 * v * s) + s / 3.0;
        case BoundKind::sub_gamma:
            return std::sqrt(2.0 * v * s) + c * s;
        case BoundKind::scaled_phi:
            return c * (std::sqrt(2.0 * v_phi * s) + s / 3.0);
        case BoundKind::count_two_sided:
            return std::sqrt(4.0 * v * s) + 2.0 * s / 3.0;
    }
    return 0.0;
}

double BoundSpec::log_mgf_bound(double lambda) const {
    if (!valid_lambda(lambda)) throw std::domain_error("log_mgf_bound: lambda outside validity");
    switch (kind) {
        case BoundKind::sub_gaussian:
            return v * lambda * lambda / 2.0;
        case BoundKind::sub_poisson:
            return v * phi(lambda);
        case BoundKind::sub_gamma:
            return v * lambda * lambda / (2.0 * (1.0 - c * lambda));
        case BoundKind::scaled_phi:
            return v_phi * phi(c * lambda);
        case BoundKind::count_two_sided:
            return 2.0 * v * lambda * lambda / (2.0 * (1.0 - 2.0 * lambda / 3.0));
    }
    return 0.0;
}

bool BoundSpec::valid_lambda(double lambda) const {
    switch (kind) {
        case BoundKind::sub_poisson:
            return true;
        case BoundKind::sub_gaussian:
            return lambda >= 0.0;
        case BoundKind::sub_gamma:
            return lambda >= 0.0 && (c == 0.0 || lambda < 1.0 / c);
        case BoundKind::scaled_phi:
            return lambda >= 0.0;
        case BoundKind::count_two_sided:
            return lambda >= 0.0 && lambda < 1.5;
    }
    return false;
}

namespace {

double upper(const certified& x) { return x.value + x.error; }

} // namespace

BoundSpec knr_bound(const MomentReport& rep, uint64_t r) {
    if (r < 1 || static_cast<int>(r) + 1 > rep.rmax) {
        throw std::invalid_argument("knr_bound: need 1 <= r < rmax");
    }
    BoundSpec b;
    b.quantity = "count-r" + std::to_string(r);
    b.side = BoundSide::two_sided;
    b.kind = BoundKind::count_two_sided;
    double es = std::max(r * upper(rep.count_r[r]), (r + 1.0) * upper(rep.count_r[r + 1]));
    b.v = 2.0 * std::min(es, upper(rep.cumulated_r[r]));
    b.multiplier = 4.0;
    b.ref = "count-bernstein-efron-stein";
    return b;
}

BoundSpec knrbar_bound(const MomentReport& rep, uint64_t r) {
    if (r < 1 || static_cast<int>(r) > rep.rmax) {
        throw std::invalid_argument("knrbar_bound: need 1 <= r <= rmax");
    }
    BoundSpec b;
    b.quantity = "cumulated-r" + std::to_string(r);
    b.side = BoundSide::two_sided;
    b.kind = BoundKind::sub_poisson;
    b.v = std::min(r * upper(rep.count_r[r]), upper(rep.cumulated_r[r]));
    b.multiplier = 2.0;
    b.ref = "cumulated-bennett";
    return b;
}

BoundSpec kr_poisson_bound(const MomentReport& rep, uint64_t r) {
    if (r < 1 || static_cast<int>(r) > rep.rmax) {
        throw std::invalid_argument("kr_poisson_bound: need 1 <= r <= rmax");
    }
    BoundSpec b;
    b.quantity = "count-r" + std::to_string(r);
    b.side = BoundSide::two_sided;
    b.kind = BoundKind::sub_poisson;
    b.v = upper(rep.count_r[r]);
    b.multiplier = 2.0;
    b.ref = "poisson-count-bennett";
    return b;
}

std::vector<BoundSpec> missing_mass_bounds(const VarianceReport& vr) {
    double n = vr.nt;
    std::vector<BoundSpec> out;

    BoundSpec left;
    left.quantity = "missing-mass";
    left.side = BoundSide::left;
    left.kind = BoundKind::sub_gaussian;
    left.v = upper(vr.v_minus);
    left.ref = "missing-mass-left-subgaussian";
    out.push_back(left);

    BoundSpec right;
    right.quantity = "missing-mass";
    right.side = BoundSide::right;
    right.kind = BoundKind::sub_gamma;
    right.v = upper(vr.v_plus);
    right.c = 1.0 / n;
    right.ref = "missing-mass-right-subgamma";
    out.push_back(right);

    if (vr.v_slow) {
        BoundSpec slow = right;
        slow.v = upper(*vr.v_slow);
        slow.ref = "missing-mass-right-dehaan";
        out.push_back(slow);
    }
    return out;
}

certified missing_mass_log_laplace_series(const FrequencyModel& m, double n,
                                          double lambda, double eps) {
    if (lambda < 0.0) throw std::domain_error("log_laplace_series: need lambda >= 0");
    if (lambda >= n) throw std::domain_error("log_laplace_series: diverges for lambda >= n");
    if (lambda == 0.0) return {0.0, 0.0};

    double x = 0.25 / n;
    uint64_t J = x >= 1.0 ? 0 : m.counting_function(x);
    long double acc = 0.0L, mag = 0.0L;
    for (uint64_t j = 1; j <= J; ++j) {
        double p = m.prob(j);
        double term = std::exp(-n * p) * phi(lambda * p);
        acc += term;
        mag += term;
    }
    certified out{static_cast<double>(acc), 5e-16 * static_cast<double>(mag)};

    // tail sum_{j>J} e^{-n p} phi(lambda p): expand both factors into the
    // power sums; inner series alternates with ratio <= eta/(m+1), outer terms
    // contract by at least lambda p / (r+1) < eta/(r+1)
    double tol = eps / 20.0;
    std::vector<certified> scache;
    auto S = [&](int k) {
        while (static_cast<int>(scache.size()) <= k) {
            scache.push_back(m.power_sum(static_cast<int>(scache.size()), J));
        }
        return scache[k];
    };
    // prime index 0 (unused) so indexing lines up
    scache.push_back(certified{0.0, 0.0});
    scache[0] = certified{0.0, 0.0};
    for (int r = 2; r < 400; ++r) {
        certified inner;
        double lr = r * std::log(lambda) - lgamma_fn(r + 1.0);
        double sign = 1.0;
        for (int mm = 0; mm < 400; ++mm) {
            certified sm = S(r + mm);
            if (sm.value <= 0.0 && sm.error <= 0.0) break;
            double lc = lr + mm * std::log(n) - lgamma_fn(mm + 1.0);
            double term = sm.value > 0.0 ? std::exp(lc + std::log(sm.value)) : 0.0;
            inner.error += sm.error > 0.0 ? std::exp(lc + std::log(sm.error)) : 0.0;
            if (term <= tol / 8.0) {
                inner.error += term;
                break;
            }
            inner.value += sign * term;
            sign = -sign;
        }
        out += inner;
        if (inner.value + inner.error <= tol) {
            out.error += tol;
            break;
        }
    }
    return out;
}

std::vector<BoundSpec> gt_gap_bounds(const MomentReport& rep) {
    double t = rep.nt;
    std::vector<BoundSpec> out;

    BoundSpec right;
    right.quantity = "gt-gap";
    right.side = BoundSide::right;
    right.kind = BoundKind::scaled_phi;
    right.v_phi = upper(rep.count_r[1]) + 2.0 * upper(rep.count_r[2]);
    right.c = 1.0 / t;
    right.v = right.v_phi * right.c * right.c;
    right.ref = "gt-gap-right-bennett";
    out.push_back(right);

    BoundSpec left;
    left.quantity = "gt-gap";
    left.side = BoundSide::left;
    left.kind = BoundKind::sub_gamma;
    left.v = 3.0 * upper(rep.coverage) / (t * t);
    left.c = 1.0 / t;
    left.ref = "gt-gap-left-subgamma";
    out.push_back(left);
    return out;
}

} // namespace urnlab
