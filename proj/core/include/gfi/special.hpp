#pragma once

namespace gfi {

// Regularized incomplete beta function I_x(a, b) for a, b > 0, x in [0, 1].
// Continued-fraction evaluation, absolute error at most 1e-12.
// Throws std::domain_error for nonpositive a or b, std::invalid_argument
// for x outside [0, 1].
double reg_inc_beta(double a, double b, double x);

// Inverse of reg_inc_beta in x: returns x with I_x(a, b) = u.
// Bracketed Newton iteration, |I_x(a,b) - u| <= 1e-10 at the result.
double inv_reg_inc_beta(double a, double b, double u);

// Same inverse with a caller-supplied starting point, for ladder-style
// callers that invert at slowly varying parameters.
double inv_reg_inc_beta_warm(double a, double b, double u, double x0);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double reg_inc_gamma(double a, double x);

// Quantile of Gamma(shape, rate): x with P(shape, rate * x) = u.
double gamma_quantile(double shape, double rate, double u);

// Standard normal quantile (rational approximation polished by one
// Newton step; relative error far below 1e-12).
double normal_quantile(double p);

// Binomial CDF P(X <= y) for X ~ Bin(n, p), evaluated through the
// regularized incomplete beta identity so that n may be large.
// Returns 0 for y < 0 and 1 for y >= n.
double binom_cdf(long long n, double p, long long y);

// log of the Binomial(n, p) pmf at y; -inf outside the support.
double binom_log_pmf(long long n, double p, long long y);

// log of the binomial coefficient C(n, k).
double ln_choose(long long n, long long k);

} // namespace gfi
