#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "estimate.hpp"
#include "ks.hpp"
#include "model.hpp"
#include "params.hpp"
#include "sampling.hpp"

namespace efgm {

struct ModelScore {
    double loglik = 0.0;
    int p_active = 0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
};

struct GofCoordinate {
    int coordinate = 0;  // 1-based
    double statistic = 0.0;
    double pvalue = 1.0;
};

struct GofReport {
    std::vector<GofCoordinate> coords;
    double alpha = 0.05;
    bool pass = true;  // no coordinate rejects at alpha
};

inline double loglik(const CopulaModel& m, const DataView& data)
{
    if (data.d != m.dim()) throw std::invalid_argument("loglik: data width does not match model");
    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        const double c = m.density(data.row(i));
        if (c <= 0.0)
            throw std::runtime_error("loglik: nonpositive density at row " + std::to_string(i + 1));
        total += std::log(c);
    }
    return total;
}

/// Same likelihood for a coefficient vector that need not satisfy the
/// sufficient validity constraint; positivity is still checked row by row.
inline double loglik(const ParamVector& p, const DataView& data)
{
    return loglik(CopulaModel::assume_valid(p), data);
}

inline int count_active(const ParamVector& p)
{
    int active = 0;
    for (double v : p.flat())
        if (v != 0.0) ++active;
    return active;
}

inline ModelScore score_params(const ParamVector& p, const DataView& data)
{
    ModelScore s;
    s.loglik = loglik(p, data);
    s.p_active = count_active(p);
    s.n = data.n;
    s.aic = -2.0 * s.loglik + 2.0 * s.p_active;
    s.bic = -2.0 * s.loglik + s.p_active * std::log(static_cast<double>(data.n));
    return s;
}

inline ModelScore score(const CopulaModel& m, const DataView& data)
{
    return score_params(m.params(), data);
}

/// Zero every coefficient whose two-sided p-value exceeds alpha. Estimates are
/// kept verbatim (no re-fit); idempotent.
inline ParamVector reduce_model(const EstimationResult& res, double alpha)
{
    ParamVector out = res.params_hat;
    const auto keys = out.keys();
    for (std::size_t i = 0; i < keys.size(); ++i)
        if (res.pvalue[i] > alpha) out.set(keys[i].k, keys[i].mask, 0.0);
    return out;
}

/// Classical-FGM projection: second-order block forced to zero, first-order
/// block kept in full.
inline ParamVector classical_projection(const ParamVector& p)
{
    ParamVector out = p;
    for (mask_t m : out.masks()) out.set(2, m, 0.0);
    return out;
}

/// Rosenblatt each row under m, then KS-test every coordinate against U(0,1).
inline GofReport gof(const CopulaModel& m, const DataView& data, double alpha = 0.05)
{
    if (data.d != m.dim()) throw std::invalid_argument("gof: data width does not match model");
    if (data.n == 0) throw std::invalid_argument("gof: empty data");
    const int d = m.dim();
    std::vector<double> cols(data.n * static_cast<std::size_t>(d));
    std::vector<double> u(d);
    for (std::size_t i = 0; i < data.n; ++i) {
        const auto row = data.row(i);
        std::copy(row.begin(), row.end(), u.begin());
        const std::vector<double> r = rosenblatt(m, u);
        for (int j = 0; j < d; ++j) cols[j * data.n + i] = r[j];
    }
    GofReport rep;
    rep.alpha = alpha;
    for (int j = 0; j < d; ++j) {
        const KsResult ks =
            ks_test_uniform({cols.data() + static_cast<std::size_t>(j) * data.n, data.n});
        rep.coords.push_back({j + 1, ks.statistic, ks.pvalue});
        if (ks.pvalue < alpha) rep.pass = false;
    }
    return rep;
}

/// Deviation-from-uniformity trace for one column: sorted u with the signed
/// gap ecdf(u) - u, the raw material of a deviation plot.
struct DeviationPoint {
    double u = 0.0;
    double dev = 0.0;
};

inline std::vector<DeviationPoint> deviation_data(std::span<const double> column)
{
    std::vector<double> x(column.begin(), column.end());
    std::sort(x.begin(), x.end());
    std::vector<DeviationPoint> out(x.size());
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = {x[i], static_cast<double>(i + 1) / n - x[i]};
    return out;
}

}  // namespace efgm
