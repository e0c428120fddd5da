#include "gfi/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gfi {

namespace {

constexpr double kFpMin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();

// Continued fraction for the incomplete beta, evaluated by the modified
// Lentz method. Valid (fast) for x < (a + 1) / (a + b + 2).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3.0e-16) break;
    }
    return h;
}

double ln_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double beta_log_pdf(double a, double b, double x) {
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - ln_beta(a, b);
}

// Series for P(a, x), x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("reg_inc_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("reg_inc_beta: x must lie in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lbt = a * std::log(x) + b * std::log1p(-x) - ln_beta(a, b);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cf(a, b, x) / a;
    }
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

namespace {

double inv_beta_impl(double a, double b, double u, double x) {
    double lo = 0.0;
    double hi = 1.0;
    // Keep a strict bracket [lo, hi] with I_lo < u < I_hi and refine by
    // Newton steps, falling back to bisection whenever a step escapes
    // the bracket or fails to reduce the residual bracket.
    if (!(x > 0.0 && x < 1.0)) x = a / (a + b);
    for (int it = 0; it < 200; ++it) {
        const double f = reg_inc_beta(a, b, x) - u;
        if (std::fabs(f) <= 1e-13) return x;
        if (f > 0.0) hi = x; else lo = x;
        if (hi - lo < 1e-17) return 0.5 * (lo + hi);
        const double lpdf = beta_log_pdf(a, b, x);
        double xn = x;
        bool newton_ok = false;
        if (lpdf > -700.0) {
            const double step = f * std::exp(-lpdf);
            xn = x - step;
            newton_ok = (xn > lo && xn < hi);
        }
        x = newton_ok ? xn : 0.5 * (lo + hi);
    }
    return x;
}

} // namespace

double inv_reg_inc_beta(double a, double b, double u) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("inv_reg_inc_beta: a and b must be positive");
    if (!(u >= 0.0 && u <= 1.0))
        throw std::invalid_argument("inv_reg_inc_beta: u must lie in [0, 1]");
    if (u == 0.0) return 0.0;
    if (u == 1.0) return 1.0;
    return inv_beta_impl(a, b, u, a / (a + b));
}

double inv_reg_inc_beta_warm(double a, double b, double u, double x0) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("inv_reg_inc_beta_warm: a and b must be positive");
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return inv_beta_impl(a, b, u, x0);
}

double reg_inc_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("reg_inc_gamma: a must be positive");
    if (x < 0.0) throw std::invalid_argument("reg_inc_gamma: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_quantile(double shape, double rate, double u) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw std::domain_error("gamma_quantile: shape and rate must be positive");
    if (!(u >= 0.0 && u < 1.0))
        throw std::invalid_argument("gamma_quantile: u must lie in [0, 1)");
    if (u == 0.0) return 0.0;

    // Wilson-Hilferty starting point, with a series fallback for small
    // shapes where the cube can go nonpositive.
    double x;
    {
        const double z = normal_quantile(u);
        const double t = 1.0 - 1.0 / (9.0 * shape) + z / (3.0 * std::sqrt(shape));
        x = shape * t * t * t;
        if (!(x > 0.0) || !std::isfinite(x)) {
            x = std::exp((std::log(u) + std::lgamma(shape + 1.0)) / shape);
            if (!(x > 0.0) || !std::isfinite(x)) x = shape;
        }
    }

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double f = reg_inc_gamma(shape, x) - u;
        if (std::fabs(f) <= 1e-13) break;
        if (f > 0.0) hi = x; else lo = x;
        const double lpdf = (shape - 1.0) * std::log(x) - x - std::lgamma(shape);
        double xn = x;
        bool newton_ok = false;
        if (lpdf > -700.0) {
            xn = x - f * std::exp(-lpdf);
            newton_ok = (xn > lo && xn < hi);
        }
        if (!newton_ok) {
            xn = std::isfinite(hi) ? 0.5 * (lo + hi) : x * 2.0;
            if (xn <= lo) xn = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1.0;
        }
        if (xn == x) break;
        x = xn;
    }
    return x / rate;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement with the complementary error function.
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double binom_cdf(long long n, double p, long long y) {
    if (n < 0) throw std::invalid_argument("binom_cdf: n must be nonnegative");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("binom_cdf: p must lie in [0, 1]");
    if (y < 0) return 0.0;
    if (y >= n) return 1.0;
    if (p == 0.0) return 1.0;
    if (p == 1.0) return 0.0;
    // P(X <= y) equals I_{1-p}(n - y, y + 1).
    return reg_inc_beta(static_cast<double>(n - y), static_cast<double>(y + 1), 1.0 - p);
}

double ln_choose(long long n, long long k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binom_log_pmf(long long n, double p, long long y) {
    if (y < 0 || y > n) return -std::numeric_limits<double>::infinity();
    if (p == 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (p == 1.0) return y == n ? 0.0 : -std::numeric_limits<double>::infinity();
    return ln_choose(n, y) + y * std::log(p) + (n - y) * std::log1p(-p);
}

} // namespace gfi
