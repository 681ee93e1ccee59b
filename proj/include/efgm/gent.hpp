#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "special.hpp"

namespace efgm {

/// Location-scale Student-t marginal: (X - a)/b has a t distribution with c
/// degrees of freedom. c need not be an integer.
struct GenTParams {
    double a = 0.0;  ///< location
    double b = 1.0;  ///< scale, > 0
    double c = 1.0;  ///< tail parameter, > 0
};

namespace detail {

inline void check_gent(const GenTParams& p)
{
    if (!(p.b > 0.0) || !(p.c > 0.0))
        throw std::domain_error("GenTParams: scale and tail parameters must be positive");
}

}  // namespace detail

inline double gent_pdf(double x, const GenTParams& p)
{
    detail::check_gent(p);
    const double t = (x - p.a) / p.b;
    const double lognorm = std::lgamma((p.c + 1.0) / 2.0) - std::lgamma(p.c / 2.0) -
                           0.5 * std::log(p.c * std::numbers::pi) - std::log(p.b);
    return std::exp(lognorm - 0.5 * (p.c + 1.0) * std::log1p(t * t / p.c));
}

inline double gent_cdf(double x, const GenTParams& p)
{
    detail::check_gent(p);
    const double t = (x - p.a) / p.b;
    if (t == 0.0) return 0.5;
    const double tail = 0.5 * reg_inc_beta(p.c / 2.0, 0.5, p.c / (p.c + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Inverse CDF by bracketed Newton on the standardized variable.
inline double gent_quantile(double u, const GenTParams& p)
{
    detail::check_gent(p);
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("gent_quantile: u outside (0,1)");
    if (u == 0.5) return p.a;
    const GenTParams std_p{0.0, 1.0, p.c};
    // Work with the upper tail of |T| so the bracket is [0, inf).
    const double uu = std::max(u, 1.0 - u);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 2100 && gent_cdf(hi, std_p) < uu; ++i) hi *= 2.0;
    double t = std::min(hi, std::fabs(norm_quantile(uu)));
    for (int it = 0; it < 200; ++it) {
        const double f = gent_cdf(t, std_p) - uu;
        if (f > 0.0)
            hi = t;
        else
            lo = t;
        const double fp = gent_pdf(t, std_p);
        double next = fp > 1e-300 ? t - f / fp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - t) <= 1e-14 * (1.0 + std::fabs(t))) {
            t = next;
            break;
        }
        t = next;
    }
    if (u < 0.5) t = -t;
    return p.a + p.b * t;
}

/// Parametric probability integral transform of one column.
inline std::vector<double> pit_gent(std::span<const double> col, const GenTParams& p)
{
    std::vector<double> out(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) out[i] = gent_cdf(col[i], p);
    return out;
}

/// Column-wise parametric PIT of a row-major n x d matrix.
inline std::vector<double> pit(const std::vector<double>& rowmajor, std::size_t n, int d,
                               const std::vector<GenTParams>& params)
{
    if (params.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("pit: need one GenTParams per column");
    if (rowmajor.size() != n * static_cast<std::size_t>(d))
        throw std::invalid_argument("pit: buffer size does not match n*d");
    std::vector<double> out(rowmajor.size());
    for (std::size_t i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            out[i * d + j] = gent_cdf(rowmajor[i * d + j], params[j]);
    return out;
}

/// Rank-based transform: midrank_i / (n + 1), ties averaged.
inline std::vector<double> pit_ranks(std::span<const double> col)
{
    const std::size_t n = col.size();
    if (n == 0) return {};
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && col[idx[j + 1]] == col[idx[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t s = i; s <= j; ++s) out[idx[s]] = midrank / static_cast<double>(n + 1);
        i = j + 1;
    }
    return out;
}

}  // namespace efgm
