#pragma once
#include <cstdint>
#include <functional>

// Shared numeric building blocks: stable elementary pieces, gamma/zeta
// machinery for the power-sum engines, and the Kolmogorov tail function.

namespace urnlab {

// value + guaranteed absolute error bound, the currency of every truncated sum
struct certified {
    double value = 0.0;
    double error = 0.0;

    certified() = default;
    certified(double v, double e) : value(v), error(e) {}

    certified& operator+=(const certified& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
    friend certified operator+(certified a, const certified& b) { return a += b; }
    friend certified operator*(double c, const certified& a) {
        double ac = c < 0 ? -c : c;
        return {c * a.value, ac * a.error};
    }
    certified& operator-=(const certified& o) {
        value -= o.value;
        error += o.error;
        return *this;
    }
};

// exp(x) - x - 1, accurate near zero
double phi(double x);

// log((1-p)/p) / (1-2p) on (0,1), continuous value 2 at p=1/2
double c_ls(double p);

// Lanczos approximation, |rel err| < 1e-13 on the real axis we use
double gamma_fn(double x);
double lgamma_fn(double x);
double log_binomial(double n, double k);

// Hurwitz zeta(s, a) = sum_{k>=0} (a+k)^{-s} for s > 1, a > 0.
// Euler-Maclaurin with Bernoulli corrections; certified() keeps the
// enveloping-remainder bound (integrand is completely monotone).
certified hurwitz_zeta(double s, double a);
double riemann_zeta(double s);

// asymptotic Kolmogorov tail Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2)
double kolmogorov_q(double x);

double norm_cdf(double z);

// composite Gauss-Legendre on [lo, hi], fixed panel count; used for the
// exponentially decaying integrals in the fastvar tail machinery
double integrate_gl(const std::function<double(double)>& f, double lo, double hi,
                    int panels);

// alternating-series accumulator: adds term(m) for m = 0,1,2,... as long as
// magnitudes strictly decrease; stops when |term| <= abs_tol and certifies the
// remainder by the first omitted term. Caller guarantees eventual decrease.
certified sum_alternating(const std::function<double(int)>& term, double abs_tol,
                          int max_terms = 400);

} // namespace urnlab
