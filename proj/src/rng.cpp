#include "urnlab/rng.hpp"

#include <cmath>

namespace urnlab {

namespace {

// log k! for k = 0..9, used by the PTRD acceptance step
constexpr double kLogFact[10] = {
    0.0,
    0.0,
    0.69314718055994531,
    1.7917594692280550,
    3.1780538303479456,
    4.7874917427820460,
    6.5792512120101010,
    8.5251613610654143,
    10.604602902745251,
    12.801827480081469,
};

int64_t poisson_inversion(xoshiro256pp& rng, double mu) {
    double limit = std::exp(-mu);
    double prod = 1.0;
    int64_t k = -1;
    do {
        prod *= rng.uniform01();
        ++k;
    } while (prod > limit);
    return k;
}

// Hormann's transformed rejection with decomposition, exact for mu >= 10
int64_t poisson_ptrd(xoshiro256pp& rng, double mu) {
    const double smu = std::sqrt(mu);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_sqrt_2pi = 0.91893853320467274;

    for (;;) {
        double u;
        double v = rng.uniform01();
        if (v <= 0.86 * v_r) {
            u = v / v_r - 0.43;
            return static_cast<int64_t>(
                std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + mu + 0.445));
        }
        if (v >= v_r) {
            u = rng.uniform01() - 0.5;
        } else {
            u = v / v_r - 0.93;
            u = (u < 0.0 ? -0.5 : 0.5) - u;
            v = rng.uniform01() * v_r;
        }
        double us = 0.5 - std::fabs(u);
        if (us < 0.013 && v > us) continue;

        double k = std::floor((2.0 * a / us + b) * u + mu + 0.445);
        v = v * inv_alpha / (a / (us * us) + b);
        if (k >= 10.0) {
            if (std::log(v * smu) <=
                (k + 0.5) * std::log(mu / k) - mu - log_sqrt_2pi + k -
                    (1.0 / 12.0 - 1.0 / (360.0 * k * k)) / k) {
                return static_cast<int64_t>(k);
            }
        } else if (k >= 0.0) {
            int ki = static_cast<int>(k);
            if (std::log(v) <= ki * std::log(mu) - mu - kLogFact[ki]) {
                return ki;
            }
        }
    }
}

} // namespace

int64_t poisson_draw(xoshiro256pp& rng, double mu) {
    if (mu <= 0.0) return 0;
    if (mu < 10.0) return poisson_inversion(rng, mu);
    return poisson_ptrd(rng, mu);
}

} // namespace urnlab
