#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace efgm {

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

inline double norm_pdf(double x)
{
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Two-sided tail mass beyond |z|, computed through erfc to keep relative
/// accuracy deep in the tail.
inline double norm_two_sided_p(double z)
{
    return std::erfc(std::fabs(z) * std::numbers::sqrt2 * 0.5);
}

/// Standard normal quantile: rational initial guess refined by two Halley
/// steps against erfc, which brings any sane starting point to full double
/// precision.
inline double norm_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
    // Acklam-style initial approximation
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else {
        const double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = norm_cdf(x) - p;
        const double u = e / norm_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

inline double log_beta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

/// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 400; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-16) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation with
/// the symmetry switch at x = (a+1)/(a+b+2).
inline double reg_inc_beta(double a, double b, double x)
{
    if (a <= 0.0 || b <= 0.0) throw std::domain_error("reg_inc_beta: parameters must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
    return 1.0 - std::exp(b * std::log1p(-x) + a * std::log(x) - log_beta(a, b)) *
                     detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Regularized lower incomplete gamma P(a, x): series for x < a+1, continued
/// fraction for the upper tail otherwise.
inline double reg_lower_gamma(double a, double x)
{
    if (a <= 0.0) throw std::domain_error("reg_lower_gamma: a must be > 0");
    if (x <= 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int n = 1; n <= 500; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 3e-16) break;
    }
    return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

inline double reg_upper_gamma(double a, double x) { return 1.0 - reg_lower_gamma(a, x); }

/// Upper tail of the chi-squared distribution with df degrees of freedom.
inline double chi2_sf(double t, int df)
{
    if (df < 1) throw std::domain_error("chi2_sf: df must be >= 1");
    if (t <= 0.0) return 1.0;
    return reg_upper_gamma(0.5 * df, 0.5 * t);
}

/// Asymptotic Kolmogorov distribution, Pr(sqrt(n) D_n <= x) in the limit.
/// Theta-series form below 1.18 (fast decay), direct alternating series above.
inline double kolmogorov_cdf(double x)
{
    if (x <= 0.0) return 0.0;
    if (x < 1.18) {
        const double t = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * x * x));
        const double series = t * (1.0 + std::pow(t, 8) * (1.0 + std::pow(t, 16) * (1.0 + std::pow(t, 24))));
        return std::sqrt(2.0 * std::numbers::pi) / x * series;
    }
    const double u = std::exp(-2.0 * x * x);
    double q = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double term = std::pow(u, k * k);
        q += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    return 1.0 - 2.0 * q;
}

/// Upper tail Q(x) = Pr(sqrt(n) D_n > x); this is the KS p-value with the
/// plain sqrt(n) scaling.
inline double kolmogorov_q(double x)
{
    if (x <= 0.0) return 1.0;
    if (x < 1.18) return 1.0 - kolmogorov_cdf(x);
    const double u = std::exp(-2.0 * x * x);
    double q = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double term = std::pow(u, k * k);
        q += sign * term;
        sign = -sign;
        if (term < 1e-18) break;
    }
    return 2.0 * q;
}

}  // namespace efgm
