#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "special.hpp"

namespace efgm {

struct KsResult {
    double statistic = 0.0;
    double pvalue = 1.0;
};

/// One-sample KS statistic of the sample against Uniform(0,1).
inline double ks_statistic_uniform(std::span<const double> sample)
{
    const std::size_t n = sample.size();
    if (n == 0) throw std::invalid_argument("ks_statistic_uniform: empty sample");
    std::vector<double> x(sample.begin(), sample.end());
    for (double& v : x) {
        if (v < -1e-12 || v > 1.0 + 1e-12)
            throw std::domain_error("ks_statistic_uniform: entry outside [0,1]");
        v = std::clamp(v, 0.0, 1.0);
    }
    std::sort(x.begin(), x.end());
    double dn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - x[i];
        const double lo = x[i] - static_cast<double>(i) / static_cast<double>(n);
        dn = std::max(dn, std::max(hi, lo));
    }
    return dn;
}

/// Asymptotic p-value P(sup_t |B(t)| > sqrt(n) * Dn) from the Kolmogorov law.
inline KsResult ks_test_uniform(std::span<const double> sample)
{
    KsResult out;
    out.statistic = ks_statistic_uniform(sample);
    const double z = std::sqrt(static_cast<double>(sample.size())) * out.statistic;
    out.pvalue = kolmogorov_q(z);
    return out;
}

}  // namespace efgm
