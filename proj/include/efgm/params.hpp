#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "basis.hpp"
#include "subset.hpp"

namespace efgm {

/// Key of one dependence coefficient: basis order k in {1,2} and subset M.
struct ParamKey {
    int k;
    mask_t mask;
    friend bool operator==(const ParamKey&, const ParamKey&) = default;
};

/// The full coefficient family Lambda = {lambda^(k)_M : k in {1,2}, |M| >= 2}
/// for one dimension d, stored in canonical order: k ascending, then |M|
/// ascending, then lexicographic on the sorted elements of M.
///
/// The vector itself is plain data and may hold arbitrary reals (estimators
/// are unconstrained sample moments); CopulaModel is the validated wrapper
/// required by density evaluation and sampling.
class ParamVector {
public:
    /// Placeholder state for result structs that are filled in later.
    ParamVector() : ParamVector(2) {}

    explicit ParamVector(int d)
        : d_(d), masks_(param_masks(d)), index_(std::size_t{1} << d, -1),
          values_(2 * masks_.size(), 0.0)
    {
        for (std::size_t i = 0; i < masks_.size(); ++i)
            index_[masks_[i]] = static_cast<int>(i);
    }

    int dim() const { return d_; }

    /// Number of stored coefficients: 2*(2^d - d - 1).
    std::size_t count() const { return values_.size(); }

    const std::vector<mask_t>& masks() const { return masks_; }

    /// Canonical (k, M) sequence; index i here matches flat()[i].
    std::vector<ParamKey> keys() const
    {
        std::vector<ParamKey> out;
        out.reserve(count());
        for (int k = 1; k <= 2; ++k)
            for (mask_t m : masks_) out.push_back({k, m});
        return out;
    }

    double get(int k, mask_t m) const { return values_[slot(k, m)]; }
    void set(int k, mask_t m, double v) { values_[slot(k, m)] = v; }

    /// Flat canonical layout (k=1 block then k=2 block).
    const std::vector<double>& flat() const { return values_; }

    void set_flat(const std::vector<double>& v)
    {
        if (v.size() != values_.size())
            throw std::invalid_argument("set_flat: wrong length");
        values_ = v;
    }

    /// Position of (k, M) in the flat canonical layout.
    std::size_t slot(int k, mask_t m) const
    {
        if (k != 1 && k != 2) throw std::invalid_argument("order must be 1 or 2");
        if (m >= index_.size() || index_[m] < 0)
            throw std::invalid_argument("not a parameter subset for this dimension");
        return (k == 1 ? 0 : masks_.size()) + static_cast<std::size_t>(index_[m]);
    }

    friend bool operator==(const ParamVector& a, const ParamVector& b)
    {
        return a.d_ == b.d_ && a.values_ == b.values_;
    }

private:
    int d_;
    std::vector<mask_t> masks_;
    std::vector<int> index_;
    std::vector<double> values_;
};

/// FNV-1a digest of the canonical layout; identifies a parameter vector in
/// sample metadata and experiment checkpoints.
inline std::uint64_t param_digest(const ParamVector& p)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto mix = [&h](std::uint64_t word) {
        for (int i = 0; i < 8; ++i) {
            h ^= (word >> (8 * i)) & 0xFFu;
            h *= 0x100000001B3ULL;
        }
    };
    mix(static_cast<std::uint64_t>(p.dim()));
    for (double v : p.flat()) mix(std::bit_cast<std::uint64_t>(v));
    return h;
}

/// Outcome of the sufficient nonnegativity constraint
///   sum_j [ sqrt(3)^j * sum_{|M|=j} |lambda^(1)_M| + sqrt(5)^j * sum_{|M|=j} |lambda^(2)_M| ] <= 1.
struct ValidityReport {
    bool valid;
    double constraint_sum;
    double margin() const { return 1.0 - constraint_sum; }
    double excess() const { return constraint_sum - 1.0; }
};

inline constexpr double kValidityTol = 1e-12;

inline ValidityReport check_validity(const ParamVector& p)
{
    double sum = 0.0;
    for (mask_t m : p.masks()) {
        const int j = subset_size(m);
        sum += std::pow(kSqrt3, j) * std::fabs(p.get(1, m));
        sum += std::pow(kSqrt5, j) * std::fabs(p.get(2, m));
    }
    return {sum <= 1.0 + kValidityTol, sum};
}

/// Proportional shrinkage of Lambda toward zero until the constraint holds
/// (with a little headroom below 1). Preserves the sign pattern. Identity for
/// vectors that already satisfy the constraint.
inline ParamVector project_to_valid(const ParamVector& p, double target = 1.0)
{
    const auto rep = check_validity(p);
    if (rep.constraint_sum <= target) return p;
    const double scale = target / rep.constraint_sum;
    ParamVector out = p;
    for (int k = 1; k <= 2; ++k)
        for (mask_t m : p.masks()) out.set(k, m, scale * p.get(k, m));
    return out;
}

}  // namespace efgm
