#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "params.hpp"
#include "sampling.hpp"
#include "special.hpp"
#include "subset.hpp"

namespace efgm {

/// Row-major view of n pseudo-observations in [0,1]^d.
struct DataView {
    const double* data = nullptr;
    std::size_t n = 0;
    int d = 0;

    DataView() = default;
    DataView(const double* ptr, std::size_t rows, int dim) : data(ptr), n(rows), d(dim) {}
    DataView(const SampleBatch& b) : data(b.rows.data()), n(b.n), d(b.d) {}
    DataView(const std::vector<double>& rowmajor, std::size_t rows, int dim)
        : data(rowmajor.data()), n(rows), d(dim)
    {
        if (rowmajor.size() != rows * static_cast<std::size_t>(dim))
            throw std::invalid_argument("DataView: buffer size does not match n*d");
    }

    double at(std::size_t i, int j) const { return data[i * d + j]; }
    std::span<const double> row(std::size_t i) const
    {
        return {data + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
    }
};

enum class VarianceMode { closed_form, plugin };
enum class Chi2Mode { null_identity, plugin };

/// Symmetric asymptotic covariance of sqrt(n)(Lambda_hat - Lambda), indexed by
/// the canonical (k, M) order.
struct CovMatrix {
    std::vector<ParamKey> order;
    Eigen::MatrixXd mat;
};

struct EstimationResult {
    ParamVector params_hat;
    std::size_t n = 0;
    std::vector<double> se;      // canonical order
    std::vector<double> pvalue;  // two-sided z-test against lambda = 0
    CovMatrix sigma_hat;
    VarianceMode variance_mode = VarianceMode::closed_form;
};

struct Chi2TestResult {
    double statistic = 0.0;
    int df = 0;
    double pvalue = 1.0;
    Chi2Mode mode = Chi2Mode::null_identity;
};

/// Joint moment E[prod_{s in P} phi_z(U_s) prod_{t in Q} phi_r(U_t)] under the
/// model with coefficients p. Expanding the density and integrating
/// coordinate-by-coordinate leaves, for each (k, M):
///   - coordinates in M beyond P and Q would integrate phi_k alone: M must lie
///     inside P union Q;
///   - coordinates of the symmetric difference carry phi_z (or phi_r) alone
///     unless M covers them: M must contain P triangle Q;
///   - shared coordinates outside M integrate phi_z phi_r: zero unless z = r;
///   - coordinates of M in P only (Q only) integrate phi_z phi_k (phi_r phi_k):
///     zero unless k = z (k = r);
///   - shared coordinates in M contribute one triple-product factor each.
inline double moment_E(const ParamVector& p, int z, int r, mask_t P, mask_t Q)
{
    if ((z != 1 && z != 2) || (r != 1 && r != 2))
        throw std::invalid_argument("moment_E: orders must be 1 or 2");
    if (subset_size(P) < 2 || subset_size(Q) < 2)
        throw std::invalid_argument("moment_E: subsets need |M| >= 2");
    const mask_t sym = P ^ Q, uni = P | Q, inter = P & Q;
    double total = (P == Q && z == r) ? 1.0 : 0.0;
    for (int k = 1; k <= 2; ++k)
        for (mask_t M : p.masks()) {
            if ((sym & ~M) != 0 || (M & ~uni) != 0) continue;
            if ((inter & ~M) != 0 && z != r) continue;
            if ((M & P & ~Q) != 0 && k != z) continue;
            if ((M & Q & ~P) != 0 && k != r) continue;
            const double lam = p.get(k, M);
            if (lam == 0.0) continue;
            const int shared = subset_size(M & inter);
            if (shared == 0) {
                total += lam;
                continue;
            }
            const double t = triple_product(k, z, r);
            if (t == 0.0) continue;
            double coef = t;
            for (int i = 1; i < shared; ++i) coef *= t;
            total += lam * coef;
        }
    return total;
}

/// Asymptotic plug-in covariance: Sigma[(z,P),(r,Q)] = E - lambda^z_P lambda^r_Q.
inline CovMatrix plug_in_covariance(const ParamVector& p)
{
    CovMatrix out;
    out.order = p.keys();
    const auto s = static_cast<Eigen::Index>(out.order.size());
    out.mat.resize(s, s);
    for (Eigen::Index i = 0; i < s; ++i) {
        const auto [z, P] = out.order[i];
        for (Eigen::Index j = i; j < s; ++j) {
            const auto [r, Q] = out.order[j];
            const double v = moment_E(p, z, r, P, Q) - p.get(z, P) * p.get(r, Q);
            out.mat(i, j) = v;
            out.mat(j, i) = v;
        }
    }
    return out;
}

/// Simplified plug-in variance surrogates:
///   s1_M = 1 + sum_{N subset M, |N|>=2} (2/sqrt5)^|N| lambda^(2)_N,
///   s2_M = 1 + sum_{N subset M, |N|>=2} (2 sqrt5/7)^|N| lambda^(2)_N.
/// Both read the k=2 coefficients only; the k=1 triple products vanish. They
/// differ from the exact diagonal by the omitted (lambda^(k)_M)^2 term.
inline std::pair<double, double> closed_form_variances(const ParamVector& p, mask_t M)
{
    if (subset_size(M) < 2) throw std::invalid_argument("closed_form_variances: |M| >= 2 required");
    double s1 = 1.0, s2 = 1.0;
    for (mask_t N : sub_masks(M)) {
        const double lam = p.get(2, N);
        const int sz = subset_size(N);
        s1 += std::pow(kTriple112, sz) * lam;
        s2 += std::pow(kTriple222, sz) * lam;
    }
    return {s1, s2};
}

/// Moment estimates alone: lambda_hat^(k)_M = (1/n) sum_i prod_{m in M} phi_k(U_im).
/// Rows are accumulated in fixed 1024-row chunks reduced in chunk order, so the
/// result is bitwise identical for any thread count.
inline ParamVector estimate_moments(const DataView& data, int threads = 1)
{
    if (data.n < 2) throw std::invalid_argument("estimate_moments: need n >= 2 rows");
    require_dimension(data.d);
    for (std::size_t i = 0; i < data.n; ++i)
        for (int j = 0; j < data.d; ++j) {
            const double x = data.at(i, j);
            if (x < -1e-12 || x > 1.0 + 1e-12)
                throw std::domain_error("estimate_moments: entry outside [0,1]");
        }
    ParamVector out(data.d);
    const auto& masks = out.masks();
    const std::size_t nterms = 2 * masks.size();
    constexpr std::size_t kChunk = 1024;
    const std::size_t nchunks = (data.n + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> partial(nchunks, std::vector<double>(nterms, 0.0));

    parallel_chunks(data.n, kChunk, threads,
                    [&](std::size_t c, std::size_t first, std::size_t last) {
                        auto& acc = partial[c];
                        for (std::size_t i = first; i < last; ++i) {
                            detail::BasisRow row(data.row(i));
                            std::size_t t = 0;
                            for (int k = 1; k <= 2; ++k)
                                for (mask_t m : masks) acc[t++] += row.product(k, m);
                        }
                    });

    std::vector<double> total(nterms, 0.0);
    for (const auto& acc : partial)
        for (std::size_t t = 0; t < nterms; ++t) total[t] += acc[t];
    std::size_t t = 0;
    for (int k = 1; k <= 2; ++k)
        for (mask_t m : masks) out.set(k, m, total[t++] / static_cast<double>(data.n));
    return out;
}

/// Full estimation: moments, standard errors, two-sided z-test p-values, and
/// the plug-in covariance at the estimate.
inline EstimationResult estimate_params(const DataView& data, int threads = 1,
                                        VarianceMode mode = VarianceMode::closed_form)
{
    EstimationResult res;
    res.params_hat = estimate_moments(data, threads);
    res.n = data.n;
    res.variance_mode = mode;
    res.sigma_hat = plug_in_covariance(res.params_hat);
    const auto keys = res.params_hat.keys();
    res.se.resize(keys.size());
    res.pvalue.resize(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        double s;
        if (mode == VarianceMode::closed_form) {
            const auto [s1, s2] = closed_form_variances(res.params_hat, keys[i].mask);
            s = keys[i].k == 1 ? s1 : s2;
        } else {
            s = res.sigma_hat.mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        }
        s = std::max(s, 0.0);
        res.se[i] = std::sqrt(s / static_cast<double>(res.n));
        res.pvalue[i] =
            res.se[i] > 0.0
                ? norm_two_sided_p(res.params_hat.flat()[i] / res.se[i])
                : (res.params_hat.flat()[i] == 0.0 ? 1.0 : 0.0);
    }
    return res;
}

/// Symmetric confidence interval lambda_hat +/- z_{alpha/2} sqrt(s/n) using the
/// simplified variance surrogates by default, or the exact plug-in diagonal.
inline std::pair<double, double> confidence_interval(const EstimationResult& res, int k, mask_t M,
                                                     double alpha,
                                                     VarianceMode mode = VarianceMode::closed_form)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("confidence_interval: alpha outside (0,1)");
    const std::size_t i = res.params_hat.slot(k, M);
    double s;
    if (mode == VarianceMode::closed_form) {
        const auto [s1, s2] = closed_form_variances(res.params_hat, M);
        s = k == 1 ? s1 : s2;
    } else {
        s = res.sigma_hat.mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    }
    const double half =
        norm_quantile(1.0 - alpha / 2.0) * std::sqrt(std::max(s, 0.0) / static_cast<double>(res.n));
    const double center = res.params_hat.flat()[i];
    return {center - half, center + half};
}

/// Chi-squared test of H0: Lambda^(2) = 0.
/// In null-identity mode the covariance of the k=2 block under H0 is exactly
/// the identity (its entries depend only on Lambda^(2)), so T_n reduces to
/// n * ||Lambda_hat^(2)||^2. Plug-in mode inverts the (2,2) block of the
/// covariance at the full estimate.
inline Chi2TestResult test_lambda2_zero(const EstimationResult& res,
                                        Chi2Mode mode = Chi2Mode::null_identity)
{
    const int d = res.params_hat.dim();
    const auto& masks = res.params_hat.masks();
    const auto s = static_cast<Eigen::Index>(masks.size());
    Eigen::VectorXd lam2(s);
    for (Eigen::Index i = 0; i < s; ++i) lam2(i) = res.params_hat.get(2, masks[i]);

    Chi2TestResult out;
    out.mode = mode;
    out.df = (1 << d) - d - 1;
    if (mode == Chi2Mode::null_identity) {
        out.statistic = static_cast<double>(res.n) * lam2.squaredNorm();
    } else {
        const Eigen::MatrixXd sigma2 = res.sigma_hat.mat.bottomRightCorner(s, s);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma2);
        const auto& ev = eig.eigenvalues();
        const double lo = ev.minCoeff(), hi = ev.maxCoeff();
        if (lo <= 0.0 || hi / lo > 1e12)
            throw std::runtime_error("test_lambda2_zero: plug-in Sigma_2 is numerically singular");
        const Eigen::VectorXd solved = sigma2.ldlt().solve(lam2);
        out.statistic = static_cast<double>(res.n) * lam2.dot(solved);
    }
    out.pvalue = chi2_sf(out.statistic, out.df);
    return out;
}

}  // namespace efgm
