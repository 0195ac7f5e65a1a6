#pragma once
#include <string>
#include <vector>

#include "urnlab/moments.hpp"

// Concentration certificates: variance factor + scale packaged with the
// functional form of the log-MGF bound and the implied tail radius.

namespace urnlab {

enum class BoundKind {
    sub_gaussian,   // log mgf <= v l^2 / 2
    sub_poisson,    // log mgf <= v phi(l), any l
    sub_gamma,      // log mgf <= v l^2 / (2 (1 - c l)), 0 <= l < 1/c
    scaled_phi,     // log mgf <= v_phi phi(c l)  (Poissonized Bennett form)
    count_two_sided // |K_r - E K_r| radius sqrt(4 v s) + 2 s / 3, multiplier 4
};

enum class BoundSide { left, right, two_sided };

struct BoundSpec {
    std::string quantity;  // "missing-mass", "count-r2", "cumulated-r1", "gt-gap"
    BoundSide side = BoundSide::right;
    BoundKind kind = BoundKind::sub_gaussian;
    double v = 0.0;          // variance factor
    double c = 0.0;          // scale (sub_gamma / scaled_phi)
    double v_phi = 0.0;      // scaled_phi only
    double multiplier = 1.0; // tail probability multiplier
    std::string ref;         // stable key naming the inequality

    // deviation radius with tail probability multiplier * exp(-s)
    double radius(double s) const;
    // the certified log-MGF dominance curve at lambda (validity range enforced
    // by valid_lambda)
    double log_mgf_bound(double lambda) const;
    bool valid_lambda(double lambda) const;
};

// |K_{n,r} - E K_{n,r}|: v = 2 min(max(r E K_r, (r+1) E K_{r+1}), E K_{rbar})
BoundSpec knr_bound(const MomentReport& binom, uint64_t r);

// K_{n,rbar} Bennett: v = min(r E K_{n,r}, E K_{n,rbar}), any lambda
BoundSpec knrbar_bound(const MomentReport& binom, uint64_t r);

// Poisson-setting K_r(t) Bennett with v = E K_r(t)
BoundSpec kr_poisson_bound(const MomentReport& poisson, uint64_t r);

// missing mass: left sub-Gaussian with v_minus, right sub-gamma (v_plus, 1/n),
// plus the de Haan (12 a(n)/n^2, 1/n) certificate when metadata provides a(n)
std::vector<BoundSpec> missing_mass_bounds(const VarianceReport& vr);

// log E exp(l (M0 - E M0)) <= sum_{r>=2} (l/n)^r E K_r(n), l > 0
// (evaluated in closed form as sum_j e^{-n p_j} phi(l p_j), certified)
certified missing_mass_log_laplace_series(const FrequencyModel& m, double n,
                                          double lambda, double eps);

// G0(t) - M0(t): right scaled-phi with var (E K1 + 2 E K2)/t^2, left
// sub-gamma (3 E K(t)/t^2, 1/t)
std::vector<BoundSpec> gt_gap_bounds(const MomentReport& poisson);

} // namespace urnlab
