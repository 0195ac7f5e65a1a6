#include "urnlab/estimators.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace urnlab {

namespace {

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void append_double(std::string& out, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

} // namespace

double good_turing(const OccupancyProfile& p, uint64_t r) {
    const double d = p.denom();
    if (!(d > 0.0))
        throw std::invalid_argument("good_turing: profile has no draws");
    return static_cast<double>(r + 1) * static_cast<double>(p.count_r(r + 1)) / d;
}

EstimateWithCI gt_ci_poisson(const OccupancyProfile& p, double delta) {
    if (p.setting != Setting::poisson || !(p.t > 0.0))
        throw std::invalid_argument("gt_ci_poisson: needs a Poisson profile with known t");
    if (!(delta > 0.0) || !(delta < 0.25))
        throw std::invalid_argument("gt_ci_poisson: delta must lie in (0, 1/4)");

    const double t = p.t;
    const double k = static_cast<double>(p.distinct());
    const double k1 = static_cast<double>(p.count_r(1));
    const double k2 = static_cast<double>(p.count_r(2));
    const double logd = std::log(1.0 / delta);

    EstimateWithCI est;
    est.point = k1 / t;
    est.delta = delta;
    est.coverage_target = 1.0 - 4.0 * delta;

    const double up = est.point + (std::sqrt(6.0 * k * logd) + 5.0 * logd) / t;
    const double lo = est.point - (std::sqrt(2.0 * (k1 + 2.0 * k2) * logd) + 4.0 * logd) / t;
    est.upper = std::min(up, 1.0);
    est.lower = std::max(lo, 0.0);
    est.clipped = (up > 1.0) || (lo < 0.0);
    return est;
}

std::optional<double> alpha_hat(const OccupancyProfile& p, uint64_t r) {
    if (r < 1)
        throw std::invalid_argument("alpha_hat: r must be >= 1");
    const uint64_t rbar = p.count_rbar(r);
    if (rbar == 0)
        return std::nullopt;
    return static_cast<double>(r) * static_cast<double>(p.count_r(r)) /
           static_cast<double>(rbar);
}

double species_estimate(const OccupancyProfile& p, double tau, double alpha,
                        uint64_t r_used, GrowthRegime regime) {
    if (!(tau >= 1.0))
        throw std::invalid_argument("species_estimate: tau must be >= 1");

    if (regime == GrowthRegime::slow) {
        if (r_used < 1)
            throw std::invalid_argument("species_estimate: slow regime needs r >= 1");
        return std::log(tau) * static_cast<double>(r_used) *
               static_cast<double>(p.count_r(r_used));
    }

    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw std::domain_error("species_estimate: power regime needs alpha in (0, 1]");

    const double growth = std::pow(tau, alpha) - 1.0;
    if (r_used == 0)
        return growth * static_cast<double>(p.distinct());

    const double base = growth / alpha * static_cast<double>(p.count_r(r_used));
    if (r_used == 1)
        return base;

    // k = 2 divides by 1 - alpha, which vanishes at alpha = 1
    if (alpha == 1.0)
        throw std::domain_error("species_estimate: product form singular at alpha = 1");
    double prod = 1.0;
    for (uint64_t k = 2; k <= r_used; ++k)
        prod *= static_cast<double>(k) / (static_cast<double>(k) - 1.0 - alpha);
    return prod * base;
}

GtMmCovariance gt_mm_covariance_poisson(const MomentReport& poisson) {
    if (poisson.setting != Setting::poisson)
        throw std::invalid_argument("gt_mm_covariance_poisson: needs a Poisson report");
    if (poisson.rmax < 2)
        throw std::invalid_argument("gt_mm_covariance_poisson: report must carry r = 1, 2");

    const double t = poisson.nt;
    const double k1 = poisson.count_r[1].value;
    const double k2 = poisson.count_r[2].value;
    const double k2_2t = poisson.count2_2.value;

    GtMmCovariance c;
    c.cov = -k2_2t / (2.0 * t * t);
    c.var_gt = k1 / (t * t) + c.cov;
    c.var_mm = 2.0 * k2 / (t * t) + c.cov;
    c.var_gap = (k1 + 2.0 * k2) / (t * t);
    return c;
}

double clt_normalizer(const MomentReport& poisson) {
    const double k1 = poisson.count_r[1].value;
    const double k2 = poisson.count_r[2].value;
    const double denom = k1 + 2.0 * k2;
    if (!(denom > 0.0))
        throw std::domain_error("clt_normalizer: degenerate moments");
    return k1 / std::sqrt(denom);
}

std::string inputs_digest(const OccupancyProfile& p, const std::string& params) {
    std::string canon;
    canon.reserve(64 + 24 * p.counts.size());
    canon += (p.setting == Setting::poisson) ? "poisson;t=" : "binomial;t=";
    append_double(canon, p.t);
    canon += ";n=";
    canon += std::to_string(p.n);
    canon += ";counts=";
    for (const auto& [symbol, count] : p.counts) {
        canon += std::to_string(symbol);
        canon += ':';
        canon += std::to_string(count);
        canon += ',';
    }
    canon += ";params=";
    canon += params;

    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon)));
    return std::string(hex);
}

} // namespace urnlab
