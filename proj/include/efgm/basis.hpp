#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace efgm {

inline const double kSqrt3 = std::sqrt(3.0);
inline const double kSqrt5 = std::sqrt(5.0);

/// Integral of phi_2^3 over [0,1]: 2*sqrt(5)/7.
inline const double kTriple222 = 2.0 * std::sqrt(5.0) / 7.0;
/// Integral of phi_1*phi_1*phi_2 over [0,1] (any permutation): 2/sqrt(5).
inline const double kTriple112 = 2.0 / std::sqrt(5.0);

namespace detail {
inline double checked_unit(double x, const char* what)
{
    if (x < -1e-12 || x > 1.0 + 1e-12)
        throw std::domain_error(std::string(what) + ": coordinate outside [0,1]");
    return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
}
}  // namespace detail

/// Shifted Legendre basis function of order k on [0,1]:
///   phi_1(x) = sqrt(3)(2x-1),  phi_2(x) = sqrt(5)(6x^2-6x+1).
/// Orthonormal and orthogonal to constants.
inline double phi(int k, double x)
{
    x = detail::checked_unit(x, "phi");
    switch (k) {
        case 1: return kSqrt3 * (2.0 * x - 1.0);
        case 2: return kSqrt5 * ((6.0 * x - 6.0) * x + 1.0);
        default: throw std::invalid_argument("phi: order must be 1 or 2");
    }
}

/// Antiderivative of phi with cap_phi(k,0) = cap_phi(k,1) = 0:
///   Phi_1(x) = sqrt(3)(x^2-x),  Phi_2(x) = sqrt(5)(2x^3-3x^2+x).
inline double cap_phi(int k, double x)
{
    x = detail::checked_unit(x, "cap_phi");
    switch (k) {
        case 1: return kSqrt3 * (x * x - x);
        case 2: return kSqrt5 * (((2.0 * x - 3.0) * x + 1.0) * x);
        default: throw std::invalid_argument("cap_phi: order must be 1 or 2");
    }
}

/// Integral of phi_z * phi_r over [0,1].
inline double pair_product(int z, int r) { return z == r ? 1.0 : 0.0; }

/// Integral of phi_k * phi_z * phi_r over [0,1]: 2*sqrt(5)/7 when k=z=r=2,
/// 2/sqrt(5) for the three permutations of (1,1,2), zero otherwise.
inline double triple_product(int k, int z, int r)
{
    const int ones = (k == 1) + (z == 1) + (r == 1);
    if (ones == 0) return kTriple222;
    if (ones == 2) return kTriple112;
    return 0.0;
}

}  // namespace efgm
