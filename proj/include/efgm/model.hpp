#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "basis.hpp"
#include "params.hpp"
#include "subset.hpp"

namespace efgm {

/// Thrown when a parameter vector fails the nonnegativity constraint but is
/// used where a genuine copula is required.
class invalid_model_error : public std::runtime_error {
public:
    explicit invalid_model_error(double excess)
        : std::runtime_error("parameter vector violates the validity constraint (excess " +
                             std::to_string(excess) + ")"),
          excess_(excess)
    {
    }
    double excess() const { return excess_; }

private:
    double excess_;
};

namespace detail {

inline void check_point(std::span<const double> u, int d, const char* what)
{
    if (static_cast<int>(u.size()) != d)
        throw std::invalid_argument(std::string(what) + ": point has wrong dimension");
    for (double x : u)
        if (x < -1e-12 || x > 1.0 + 1e-12)
            throw std::domain_error(std::string(what) + ": coordinate outside [0,1]");
}

/// phi_1 and phi_2 at each coordinate, without re-branching per term.
struct BasisRow {
    std::vector<double> p1, p2;
    explicit BasisRow(std::span<const double> u) : p1(u.size()), p2(u.size())
    {
        for (std::size_t j = 0; j < u.size(); ++j) {
            const double x = u[j];
            p1[j] = kSqrt3 * (2.0 * x - 1.0);
            p2[j] = kSqrt5 * ((6.0 * x - 6.0) * x + 1.0);
        }
    }
    double product(int k, mask_t m) const
    {
        const auto& p = (k == 1) ? p1 : p2;
        double out = 1.0;
        while (m != 0) {
            const int j = std::countr_zero(m);
            out *= p[j];
            m &= m - 1;
        }
        return out;
    }
};

}  // namespace detail

/// A validated extended FGM copula: the constraint-checked (or explicitly
/// trusted) parameter vector plus density/CDF evaluation. Construct through
/// checked() for the guarantee that the density is a genuine copula density,
/// or through assume_valid() to skip the check. The latter exists because the
/// constraint is sufficient but not necessary, and because the reference
/// simulation settings in the literature are used without it.
class CopulaModel {
public:
    static CopulaModel checked(ParamVector p)
    {
        const auto rep = check_validity(p);
        if (!rep.valid) throw invalid_model_error(rep.excess());
        return CopulaModel(std::move(p));
    }

    static CopulaModel assume_valid(ParamVector p) { return CopulaModel(std::move(p)); }

    const ParamVector& params() const { return params_; }
    int dim() const { return params_.dim(); }

    /// Joint density c(u) = 1 + sum_k sum_M lambda^(k)_M prod_{m in M} phi_k(u_m).
    double density(std::span<const double> u) const
    {
        detail::check_point(u, dim(), "density");
        return density_unchecked(u, full_mask(dim()));
    }

    double log_density(std::span<const double> u) const
    {
        const double c = density(u);
        if (c <= 0.0) throw std::domain_error("log_density: nonpositive density");
        return std::log(c);
    }

    /// Joint CDF
    ///   C(u) = prod_j u_j + sum_k sum_M lambda^(k)_M prod_{m not in M} u_m prod_{m in M} Phi_k(u_m).
    double cdf(std::span<const double> u) const
    {
        detail::check_point(u, dim(), "cdf");
        const int d = dim();
        double base = 1.0;
        for (double x : u) base *= x;
        std::vector<double> c1(d), c2(d);
        for (int j = 0; j < d; ++j) {
            c1[j] = cap_phi(1, u[j]);
            c2[j] = cap_phi(2, u[j]);
        }
        double total = base;
        for (int k = 1; k <= 2; ++k) {
            const auto& cp = (k == 1) ? c1 : c2;
            for (mask_t m : params_.masks()) {
                const double lam = params_.get(k, m);
                if (lam == 0.0) continue;
                double term = lam;
                for (int j = 0; j < d; ++j)
                    term *= subset_contains(m, j + 1) ? cp[j] : u[j];
                total += term;
            }
        }
        return total;
    }

    /// Density of the marginal of the first ell coordinates, evaluated at the
    /// prefix u[0..ell-1]. Integrating out trailing coordinates removes every
    /// term whose subset touches them, so only M inside {1..ell} survive.
    double prefix_density(std::span<const double> prefix) const
    {
        const int ell = static_cast<int>(prefix.size());
        if (ell < 1 || ell > dim())
            throw std::invalid_argument("prefix_density: bad prefix length");
        for (double x : prefix)
            if (x < -1e-12 || x > 1.0 + 1e-12)
                throw std::domain_error("prefix_density: coordinate outside [0,1]");
        return density_unchecked(prefix, full_mask(ell));
    }

    /// Model of the subvector indexed by P (|P| >= 2): keeps exactly the
    /// lambda^(k)_M with M inside P, relabeled to 1..|P| preserving order.
    CopulaModel subvector(mask_t P) const
    {
        const int dp = subset_size(P);
        if (dp < 2) throw std::invalid_argument("subvector: |P| must be >= 2");
        if (P > full_mask(dim())) throw std::invalid_argument("subvector: P outside 1..d");
        const auto elems = subset_elements(P);
        std::vector<int> relabel(dim() + 1, 0);
        for (int i = 0; i < dp; ++i) relabel[elems[i]] = i + 1;
        ParamVector sub(dp);
        for (int k = 1; k <= 2; ++k)
            for (mask_t m : params_.masks()) {
                if ((m & ~P) != 0) continue;
                mask_t t = 0;
                for (int v : subset_elements(m)) t |= mask_t{1} << (relabel[v] - 1);
                sub.set(k, t, params_.get(k, m));
            }
        return CopulaModel(std::move(sub));
    }

private:
    explicit CopulaModel(ParamVector p) : params_(std::move(p)) {}

    double density_unchecked(std::span<const double> u, mask_t allowed) const
    {
        detail::BasisRow row(u);
        double total = 1.0;
        for (int k = 1; k <= 2; ++k)
            for (mask_t m : params_.masks()) {
                if ((m & ~allowed) != 0) continue;
                const double lam = params_.get(k, m);
                if (lam == 0.0) continue;
                total += lam * row.product(k, m);
            }
        return total;
    }

    ParamVector params_;
};

}  // namespace efgm
