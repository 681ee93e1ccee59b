#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace efgm {

class singular_prefix_error : public std::runtime_error {
public:
    singular_prefix_error() : std::runtime_error("conditioning prefix has zero density") {}
};

/// Coefficients of the conditional CDF of U_ell given the prefix:
///   F(t) = 2*sqrt(5)*delta2*t^3 + (sqrt(3)*delta1 - 3*sqrt(5)*delta2)*t^2
///          + (1 - sqrt(3)*delta1 + sqrt(5)*delta2)*t,
/// a polynomial with F(0)=0, F(1)=1; nondecreasing whenever the model is a
/// genuine copula.
struct ConditionalCoeffs {
    double delta1 = 0.0;
    double delta2 = 0.0;
};

inline ConditionalCoeffs conditional_coeffs(const CopulaModel& m, std::span<const double> prefix,
                                            int ell)
{
    if (ell < 2 || ell > m.dim())
        throw std::invalid_argument("conditional_coeffs: index must lie in 2..d");
    if (static_cast<int>(prefix.size()) != ell - 1)
        throw std::invalid_argument("conditional_coeffs: prefix length must be ell-1");
    const double denom = m.prefix_density(prefix);
    if (denom <= 1e-12) throw singular_prefix_error();

    detail::BasisRow row(prefix);
    const mask_t below = full_mask(ell - 1);
    const mask_t self = mask_t{1} << (ell - 1);
    ConditionalCoeffs out;
    for (int k = 1; k <= 2; ++k) {
        double num = 0.0;
        for (mask_t M : m.params().masks()) {
            if ((M & self) == 0 || (M & ~(below | self)) != 0) continue;
            const double lam = m.params().get(k, M);
            if (lam == 0.0) continue;
            num += lam * row.product(k, M & below);
        }
        (k == 1 ? out.delta1 : out.delta2) = num / denom;
    }
    return out;
}

inline double conditional_cdf(const ConditionalCoeffs& c, double t)
{
    if (t < 0.0 || t > 1.0) throw std::domain_error("conditional_cdf: t outside [0,1]");
    const double a = 2.0 * kSqrt5 * c.delta2;
    const double b = kSqrt3 * c.delta1 - 3.0 * kSqrt5 * c.delta2;
    const double lin = 1.0 - kSqrt3 * c.delta1 + kSqrt5 * c.delta2;
    return ((a * t + b) * t + lin) * t;
}

namespace detail {
inline double conditional_pdf(const ConditionalCoeffs& c, double t)
{
    const double a = 2.0 * kSqrt5 * c.delta2;
    const double b = kSqrt3 * c.delta1 - 3.0 * kSqrt5 * c.delta2;
    const double lin = 1.0 - kSqrt3 * c.delta1 + kSqrt5 * c.delta2;
    return (3.0 * a * t + 2.0 * b) * t + lin;
}
}  // namespace detail

/// Solves conditional_cdf(c, t) = v on [0,1] to |F(t)-v| <= 1e-12 by Newton
/// steps safeguarded inside a shrinking bisection bracket. The cubic may
/// degenerate to a quadratic or linear map (delta2 or both deltas zero); the
/// iteration handles every case uniformly.
inline double invert_conditional(const ConditionalCoeffs& c, double v)
{
    if (v < 0.0 || v > 1.0) throw std::domain_error("invert_conditional: v outside [0,1]");
    double lo = 0.0, hi = 1.0;
    double t = v;
    for (int iter = 0; iter < 200; ++iter) {
        const double f = conditional_cdf(c, t) - v;
        if (std::fabs(f) <= 1e-12) return t;
        if (f < 0.0) lo = t; else hi = t;
        const double fp = detail::conditional_pdf(c, t);
        double next = (fp > 1e-14) ? t - f / fp : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        t = next;
    }
    throw std::runtime_error("invert_conditional: no convergence within iteration budget");
}

/// A generated sample with its provenance: seed and the digest of the
/// generating parameter vector.
struct SampleBatch {
    std::size_t n = 0;
    int d = 0;
    std::uint64_t seed = 0;
    std::uint64_t model_digest = 0;
    std::vector<double> rows;  // row-major n x d

    double at(std::size_t i, int j) const { return rows[i * d + j]; }
    std::span<const double> row(std::size_t i) const { return {rows.data() + i * d, static_cast<std::size_t>(d)}; }
};

/// Draws n i.i.d. rows by sequential conditional inversion. Row i consumes
/// exactly the uniforms of substream(seed, i), so the output is byte-identical
/// for any thread count and rows can be regenerated individually.
inline SampleBatch sample(const CopulaModel& m, std::size_t n, std::uint64_t seed,
                          int threads = 1)
{
    if (n == 0) throw std::invalid_argument("sample: n must be >= 1");
    const int d = m.dim();
    SampleBatch batch;
    batch.n = n;
    batch.d = d;
    batch.seed = seed;
    batch.model_digest = param_digest(m.params());
    batch.rows.resize(n * static_cast<std::size_t>(d));

    parallel_chunks(n, 256, threads, [&](std::size_t, std::size_t first, std::size_t last) {
        std::vector<double> u(d);
        for (std::size_t i = first; i < last; ++i) {
            SplitMix64 rng = substream(seed, i);
            u[0] = rng.uniform();
            for (int ell = 2; ell <= d; ++ell) {
                const auto coeffs =
                    conditional_coeffs(m, std::span<const double>(u.data(), ell - 1), ell);
                try {
                    u[ell - 1] = invert_conditional(coeffs, rng.uniform());
                } catch (const std::runtime_error& e) {
                    throw std::runtime_error("sample: row " + std::to_string(i) + ": " + e.what());
                }
            }
            for (int j = 0; j < d; ++j) batch.rows[i * d + j] = u[j];
        }
    });
    return batch;
}

/// Forward Rosenblatt transform: R_1 = u_1 and
/// R_ell = F(u_ell | u_1..u_{ell-1}); under the generating model the output
/// coordinates are i.i.d. uniform. Inputs are clamped to [1e-15, 1-1e-15]
/// so boundary values stay inside the open cube.
inline std::vector<double> rosenblatt(const CopulaModel& m, std::span<const double> u)
{
    const int d = m.dim();
    detail::check_point(u, d, "rosenblatt");
    std::vector<double> x(u.begin(), u.end());
    for (double& v : x) v = std::min(1.0 - 1e-15, std::max(1e-15, v));
    std::vector<double> r(d);
    r[0] = x[0];
    for (int ell = 2; ell <= d; ++ell) {
        const auto coeffs =
            conditional_coeffs(m, std::span<const double>(x.data(), ell - 1), ell);
        const double v = conditional_cdf(coeffs, x[ell - 1]);
        r[ell - 1] = std::min(1.0, std::max(0.0, v));
    }
    return r;
}

}  // namespace efgm
