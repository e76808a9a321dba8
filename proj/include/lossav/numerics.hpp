#pragma once

#include <cstdint>
#include <functional>

namespace lossav::num {

// Brent root finder on [a, b]; requires f(a) and f(b) of opposite sign
// (either may be zero). Converges to |interval| < xtol.
double brent(const std::function<double(double)>& f, double a, double b,
             double xtol = 1e-12, int max_iter = 200);

// Adaptive quadrature of a smooth integrand over [a, b]. Splits intervals
// until the two-half refinement of a 15-point Gauss-Legendre rule changes by
// less than the local tolerance share. Throws NumericalError with the
// achieved error when the interval budget runs out.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-9, double rel_tol = 1e-10,
                 int max_intervals = 4000);

// Scaled complementary error function exp(x^2) * erfc(x). Stable for large
// positive x; throws for x below about -26.6 where the value overflows.
double erfcx(double x);

// Standard normal CDF and quantile. The quantile uses the classic rational
// initial approximation (Abramowitz & Stegun 26.2.22) polished with Newton
// steps on erfc, giving close to full double accuracy.
double normal_cdf(double z);
double normal_quantile(double p);

// Regularized lower incomplete gamma P(a, x).
double gammp(double a, double x);

// Chi-square CDF and quantile (Wilson-Hilferty start + Newton on gammp).
double chi2_cdf(double x, double dof);
double chi2_quantile(double p, double dof);

// Deterministic parallel loop: runs fn(i) for i in [0, n) on up to
// `threads` workers. Work is split into contiguous blocks; fn must write
// results into caller-owned slots indexed by i so the outcome is
// independent of the worker count.
void parallel_for(std::int64_t n, int threads,
                  const std::function<void(std::int64_t)>& fn);

}  // namespace lossav::num
