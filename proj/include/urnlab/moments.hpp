#pragma once
#include <optional>
#include <string>
#include <vector>

#include "urnlab/models.hpp"
#include "urnlab/sampler.hpp"

// Expected occupancy counts and masses to certified tolerance, exact Poisson
// variances, the computable variance proxies, and asymptotic predictions.
//
// Every expectation is an infinite sum split at J = nu(eta/T): an exact head
// plus an alternating tail series in the power sums S_m(J); with T*p_{J+1}
// below eta the terms decay geometrically and the remainder is certified by
// the first omitted term.

namespace urnlab {

certified expected_coverage(const FrequencyModel& m, Setting st, double nt, double eps);
certified expected_count(const FrequencyModel& m, Setting st, double nt, uint64_t r, double eps);
certified expected_cumulated(const FrequencyModel& m, Setting st, double nt, uint64_t r, double eps);
certified expected_mass(const FrequencyModel& m, Setting st, double nt, uint64_t r, double eps);

// var K(t) = E K(2t) - E K(t); var M0(t) = 2 E K2(t)/t^2 - E K2(2t)/(2 t^2)
certified variance_coverage_poisson(const FrequencyModel& m, double t, double eps);
certified variance_missing_mass_poisson(const FrequencyModel& m, double t, double eps);

struct MomentReport {
    std::string model_spec;
    Setting setting = Setting::binomial;
    double nt = 0.0;
    double epsilon = 1e-9;
    int rmax = kProfileRMax;
    certified coverage;                  // E K
    std::vector<certified> count_r;      // [0] unused, r = 1..rmax
    std::vector<certified> cumulated_r;  // [0] unused, r = 1..rmax
    std::vector<certified> mass_r;       // r = 0..rmax
    // doubled-argument companions (2t / 2n) feeding the variance formulas
    certified coverage_2;
    certified count1_2;
    certified count2_2;
};

MomentReport build_moment_report(const FrequencyModel& m, Setting st, double nt,
                                 int rmax, double eps);

struct VarianceReport {
    std::string model_spec;
    Setting setting = Setting::binomial;
    double nt = 0.0;
    certified var_coverage_poisson;  // at t = nt
    certified var_missing_poisson;   // at t = nt
    certified sandwich_lo, sandwich_hi;  // E K1(2t)/2 <= var K(t) <= E K1(t)
    certified v_minus;  // 2 E K2(t=n)/n^2
    certified v_plus;   // 2 E K_{2bar}(t=n)/n^2
    certified w_n;      // sum_j p_j^2 / (2 c_ls((1-p_j)^n))
    certified var_ind;  // E K_{2n} - E K_n, binomial proxy
    std::optional<certified> v_slow;  // 12 a(n)/n^2, de Haan models only
};

VarianceReport build_variance_report(const FrequencyModel& m, double n, double eps);

// exact binomial variances by pair sums over a finite support (throws if the
// support exceeds 4096 symbols)
struct ExactBinomialVariances {
    double var_coverage;
    double var_missing;
};
ExactBinomialVariances exact_binomial_variances(const FrequencyModel& m, uint64_t n);

// interval diagnostics around the Poissonization gap:
//   E K2(2n)/n <= var K(n) - Var^ind <= 2 E K2(n)/n
//   0 <= Var^ind - var K_n <= (E K_{n,1})^2/n - E K_{2n,2}/(2n-1)
struct PoissonizationGap {
    certified var_poisson;   // var K(t=n)
    certified var_ind;       // E K_{2n} - E K_n
    certified gap_poisson_lo, gap_poisson_hi;
    certified gap_binom_hi;  // lower endpoint is 0
    // implied interval for the true binomial var K_n
    double implied_lo() const { return var_ind.value - gap_binom_hi.value - var_ind.error - gap_binom_hi.error; }
    double implied_hi() const { return var_ind.value + var_ind.error; }
};
PoissonizationGap poissonization_gap(const FrequencyModel& m, uint64_t n, double eps);

// regime-appropriate predictions from regular-variation metadata alone
struct KarlinPrediction {
    double coverage = 0.0;
    std::vector<double> count_r;      // r = 1..rmax
    std::vector<double> cumulated_r;  // r = 1..rmax
    double var_missing = 0.0;
};
// throws std::domain_error when meta is absent or alpha outside [0,1]
KarlinPrediction karlin_asymptotics(const FrequencyModel& m, double n, int rmax);

// sqrt(v_minus) / E M_{n,0}; nullopt when the missing mass is zero
std::optional<double> relative_fluctuation(const FrequencyModel& m, double n, double eps);

} // namespace urnlab
