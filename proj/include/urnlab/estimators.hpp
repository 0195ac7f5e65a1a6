#pragma once
#include <optional>
#include <string>

#include "urnlab/moments.hpp"
#include "urnlab/sampler.hpp"

// Estimators seen through the profile alone: Good-Turing masses, the Poisson
// confidence interval, the regular-variation index, and species forecasts.
// None of these touch a FrequencyModel.

namespace urnlab {

struct EstimateWithCI {
    double point = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double delta = 0.0;            // per-tail failure budget
    double coverage_target = 0.0;  // 1 - 4 delta
    bool clipped = false;          // interval met the [0,1] walls
};

// G_{n,r} = (r+1) K_{n,r+1} / n  (Poisson setting divides by t)
double good_turing(const OccupancyProfile& p, uint64_t r);

// two-sided interval for M0(t) from the empirical K(t), K1(t), K2(t):
//   upper: G0 + (sqrt(6 K log(1/d)) + 5 log(1/d)) / t
//   lower: G0 - (sqrt(2 (K1 + 2 K2) log(1/d)) + 4 log(1/d)) / t
// throws std::invalid_argument unless 0 < delta < 1/4 and the profile is
// Poisson-setting with known t
EstimateWithCI gt_ci_poisson(const OccupancyProfile& p, double delta);

// alpha-hat = r K_{n,r} / K_{n,rbar}; nullopt when K_{n,rbar} = 0
std::optional<double> alpha_hat(const OccupancyProfile& p, uint64_t r);

enum class GrowthRegime { power, slow };

// predicted K_{tau n} - K_n:
//   power regime  r=0: (tau^a - 1) K_n
//                 r=1: ((tau^a - 1)/a) K_{n,1}
//                 r>=2: prod_{k=2}^r k/(k-1-a) * ((tau^a - 1)/a) * K_{n,r}
//   slow regime: log(tau) r K_{n,r}  (r >= 1)
// throws std::domain_error on the singular product denominator (a = 1, r >= 2)
double species_estimate(const OccupancyProfile& p, double tau, double alpha,
                        uint64_t r_used, GrowthRegime regime);

// cov(G0(t), M0(t)): diag(E K1, 2 E K2)/t^2 minus the rank-one correction
// E K2(2t)/(2t^2) on every entry
struct GtMmCovariance {
    double var_gt;     // E K1(t) / t^2 - E K2(2t) / (2 t^2)
    double var_mm;     // 2 E K2(t) / t^2 - E K2(2t) / (2 t^2)
    double cov;        // -E K2(2t) / (2 t^2)
    double var_gap;    // (E K1(t) + 2 E K2(t)) / t^2, exactly var(G0 - M0)
};
GtMmCovariance gt_mm_covariance_poisson(const MomentReport& poisson);

// E K1(t) / sqrt(E K1(t) + 2 E K2(t)); standardizes G0/M0 - 1
double clt_normalizer(const MomentReport& poisson);

// short stable digest of (profile, parameters) recorded in estimate reports
std::string inputs_digest(const OccupancyProfile& p, const std::string& params);

} // namespace urnlab
