// Build a small 3-variate model, draw a sample, and recover the parameters
// with confidence intervals.
#include <cstdio>

#include "efgm/efgm.hpp"

int main()
{
    efgm::ParamVector p(3);
    p.set(1, efgm::mask_from_elements({1, 2}, 3), 0.10);
    p.set(1, efgm::mask_from_elements({2, 3}, 3), -0.08);
    p.set(2, efgm::mask_from_elements({1, 2, 3}, 3), 0.04);

    const auto report = efgm::check_validity(p);
    std::printf("constraint sum %.4f (margin %.4f)\n", report.constraint_sum, report.margin());

    const auto model = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(model, 20000, /*seed=*/20240915u, /*threads=*/2);
    const auto res = efgm::estimate_params(efgm::DataView(batch), 2);

    std::printf("%-4s %-6s %10s %10s %22s\n", "k", "M", "truth", "estimate", "95% CI");
    const auto keys = res.params_hat.keys();
    for (const auto& [k, mask] : keys) {
        const auto [lo, hi] = efgm::confidence_interval(res, k, mask, 0.05);
        std::printf("%-4d %-6s %10.4f %10.4f      [%8.4f, %8.4f]\n", k,
                    efgm::mask_label(mask, 3).c_str(), p.get(k, mask),
                    res.params_hat.get(k, mask), lo, hi);
    }
    return 0;
}
