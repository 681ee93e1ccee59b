#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace efgm {

/// Bitmask over variable positions 1..d: bit i-1 set <=> variable i in M.
using mask_t = std::uint32_t;

/// Largest supported dimension. Parameter families grow as 2^(d+1),
/// so anything beyond this is impractical anyway.
inline constexpr int kMaxDim = 16;

inline int subset_size(mask_t m) { return std::popcount(m); }

inline bool subset_contains(mask_t m, int var) { return (m >> (var - 1)) & 1u; }

inline mask_t full_mask(int d) { return (d == 32) ? ~mask_t{0} : (mask_t{1} << d) - 1; }

/// Elements of M as 1-based variable indices, ascending.
inline std::vector<int> subset_elements(mask_t m)
{
    std::vector<int> out;
    out.reserve(subset_size(m));
    for (int v = 1; m != 0; ++v, m >>= 1)
        if (m & 1u) out.push_back(v);
    return out;
}

inline mask_t mask_from_elements(const std::vector<int>& elems, int d)
{
    mask_t m = 0;
    for (int v : elems) {
        if (v < 1 || v > d) throw std::out_of_range("subset element outside 1..d");
        m |= mask_t{1} << (v - 1);
    }
    return m;
}

inline void require_dimension(int d)
{
    if (d < 2 || d > kMaxDim)
        throw std::invalid_argument("dimension must lie in [2, 16]");
}

/// Canonical listing of all parameter subsets (|M| >= 2) for dimension d:
/// ascending cardinality, and within each cardinality lexicographic on the
/// sorted element tuples. For d=4 this yields
///   {12},{13},{14},{23},{24},{34},{123},{124},{134},{234},{1234}.
inline std::vector<mask_t> param_masks(int d)
{
    require_dimension(d);
    std::vector<mask_t> out;
    out.reserve((std::size_t{1} << d) - std::size_t(d) - 1);
    std::vector<int> comb;
    for (int size = 2; size <= d; ++size) {
        comb.resize(size);
        for (int i = 0; i < size; ++i) comb[i] = i + 1;
        while (true) {
            mask_t m = 0;
            for (int v : comb) m |= mask_t{1} << (v - 1);
            out.push_back(m);
            int i = size - 1;
            while (i >= 0 && comb[i] == d - (size - 1 - i)) --i;
            if (i < 0) break;
            ++comb[i];
            for (int j = i + 1; j < size; ++j) comb[j] = comb[j - 1] + 1;
        }
    }
    return out;
}

/// Subsets N of M with |N| >= 2, in the same canonical order.
inline std::vector<mask_t> sub_masks(mask_t m)
{
    std::vector<mask_t> out;
    // iterate all non-empty submasks, then order by (size, lex) via stable criteria
    for (mask_t s = m; s != 0; s = (s - 1) & m)
        if (subset_size(s) >= 2) out.push_back(s);
    // the (s-1)&m walk emits descending; canonical order is easiest by sort
    std::sort(out.begin(), out.end(), [](mask_t a, mask_t b) {
        if (subset_size(a) != subset_size(b)) return subset_size(a) < subset_size(b);
        const auto ea = subset_elements(a), eb = subset_elements(b);
        return ea < eb;
    });
    return out;
}

}  // namespace efgm
