#include <catch2/catch_amalgamated.hpp>
#include <algorithm>
#include <cmath>
#include <vector>

#include "efgm/model.hpp"
#include "efgm/rng.hpp"
#include "efgm/sampling.hpp"
#include "models.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("conditional coefficients for a hand-checkable prefix", "[sampling]")
{
    // d=2 with a single pairwise coefficient: conditioning on u1 = 1 puts
    // phi_1(1) = sqrt(3) in the product, so the degree-1 slope is 0.3*sqrt(3).
    efgm::ParamVector p(2);
    p.set(1, 3, 0.3);
    const auto m = efgm::CopulaModel::checked(p);
    const std::vector<double> prefix{1.0};
    const auto c = efgm::conditional_coeffs(m, prefix, 2);
    CHECK_THAT(c.delta1, WithinAbs(0.3 * std::sqrt(3.0), 1e-14));
    CHECK_THAT(c.delta2, WithinAbs(0.0, 1e-15));
    // with delta2 = 0: F(t) = sqrt(3)*delta1*t^2 + (1 - sqrt(3)*delta1)*t,
    // so F(1/2) = 0.9/4 + 0.1/2 = 0.275
    CHECK_THAT(efgm::conditional_cdf(c, 0.5), WithinAbs(0.275, 1e-12));
}

TEST_CASE("conditional cdf endpoints and monotonicity", "[sampling]")
{
    efgm::SplitMix64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = testutil::random_validated(3, rng);
        const auto m = efgm::CopulaModel::checked(p);
        const std::vector<double> prefix{rng.uniform(), rng.uniform()};
        const auto c = efgm::conditional_coeffs(m, prefix, 3);
        CHECK_THAT(efgm::conditional_cdf(c, 0.0), WithinAbs(0.0, 1e-15));
        CHECK_THAT(efgm::conditional_cdf(c, 1.0), WithinAbs(1.0, 1e-12));
        double prev = 0.0;
        for (int i = 1; i <= 50; ++i) {
            const double cur = efgm::conditional_cdf(c, i / 50.0);
            CHECK(cur >= prev - 1e-13);
            prev = cur;
        }
    }
}

TEST_CASE("inversion round-trips through the conditional cdf", "[sampling]")
{
    efgm::SplitMix64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = testutil::random_validated(4, rng);
        const auto m = efgm::CopulaModel::checked(p);
        std::vector<double> prefix{rng.uniform(), rng.uniform(), rng.uniform()};
        const auto c = efgm::conditional_coeffs(m, prefix, 4);
        for (const double v : {0.0, 1e-9, 0.1, 0.5, 0.9, 1.0 - 1e-9, 1.0}) {
            const double t = efgm::invert_conditional(c, v);
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
            CHECK_THAT(efgm::conditional_cdf(c, t), WithinAbs(v, 1e-11));
        }
        CHECK(efgm::invert_conditional(c, 0.0) == 0.0);
        CHECK(efgm::invert_conditional(c, 1.0) == 1.0);
    }
}

TEST_CASE("sampling under independence is plain uniform", "[sampling]")
{
    const auto m = efgm::CopulaModel::checked(efgm::ParamVector(3));
    const auto batch = efgm::sample(m, 4000, 77);
    REQUIRE(batch.n == 4000);
    REQUIRE(batch.d == 3);
    for (int j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < batch.n; ++i) {
            const double u = batch.at(i, j);
            REQUIRE(u >= 0.0);
            REQUIRE(u < 1.0);
            mean += u;
        }
        mean /= static_cast<double>(batch.n);
        // SE of the mean is 1/sqrt(12 n) ~ 0.00456; allow 4 sigma
        CHECK_THAT(mean, WithinAbs(0.5, 0.019));
    }
}

TEST_CASE("samples reproduce pairwise product moments", "[sampling][slow]")
{
    // E[phi_k(U_a) phi_k(U_b)] equals the pair coefficient, by orthonormality.
    efgm::ParamVector p(3);
    p.set(1, 3, 0.15);
    p.set(2, 6, -0.08);
    const auto m = efgm::CopulaModel::checked(p);
    const std::size_t n = 200000;
    const auto batch = efgm::sample(m, n, 2023, 4);
    double m12 = 0.0, m23 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m12 += efgm::phi(1, batch.at(i, 0)) * efgm::phi(1, batch.at(i, 1));
        m23 += efgm::phi(2, batch.at(i, 1)) * efgm::phi(2, batch.at(i, 2));
    }
    m12 /= static_cast<double>(n);
    m23 /= static_cast<double>(n);
    // var of each product is O(1); 4 sigma at n = 2e5 is about 0.009
    CHECK_THAT(m12, WithinAbs(0.15, 0.012));
    CHECK_THAT(m23, WithinAbs(-0.08, 0.012));
}

TEST_CASE("empirical copula tracks the model cdf", "[sampling][slow]")
{
    efgm::ParamVector p(2);
    p.set(1, 3, 0.20);
    p.set(2, 3, 0.06);
    const auto m = efgm::CopulaModel::checked(p);
    const std::size_t n = 100000;
    const auto batch = efgm::sample(m, n, 5150, 2);
    double worst = 0.0;
    for (int a = 1; a <= 4; ++a)
        for (int b = 1; b <= 4; ++b) {
            const double ua = a / 5.0, ub = b / 5.0;
            std::size_t cnt = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (batch.at(i, 0) <= ua && batch.at(i, 1) <= ub) ++cnt;
            const double emp = static_cast<double>(cnt) / static_cast<double>(n);
            worst = std::max(worst, std::abs(emp - m.cdf(std::vector<double>{ua, ub})));
        }
    CHECK(worst <= 2.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampling is byte-identical across thread counts", "[sampling]")
{
    efgm::SplitMix64 rng(99);
    const auto p = testutil::random_validated(4, rng);
    const auto m = efgm::CopulaModel::checked(p);
    const auto one = efgm::sample(m, 3000, 424242, 1);
    const auto four = efgm::sample(m, 3000, 424242, 4);
    const auto eight = efgm::sample(m, 3000, 424242, 8);
    CHECK(one.rows == four.rows);
    CHECK(one.rows == eight.rows);
}

TEST_CASE("batch metadata identifies its source", "[sampling]")
{
    efgm::ParamVector p(2);
    p.set(1, 3, 0.1);
    const auto m = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(m, 10, 7);
    CHECK(batch.seed == 7);
    CHECK(batch.model_digest == efgm::param_digest(p));
    CHECK(batch.rows.size() == 20);
    CHECK(batch.row(3).size() == 2);
    CHECK(batch.row(3).data() == &batch.rows[6]);
}

TEST_CASE("rosenblatt transform is the inverse of sampling recursion", "[sampling]")
{
    efgm::SplitMix64 rng(11);
    const auto p = testutil::random_validated(4, rng);
    const auto m = efgm::CopulaModel::checked(p);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> u(4);
        for (auto& x : u) x = rng.uniform();
        const auto z = efgm::rosenblatt(m, u);
        REQUIRE(z.size() == 4);
        // invert manually through the conditional cdf chain
        std::vector<double> rebuilt;
        for (int ell = 1; ell <= 4; ++ell) {
            efgm::ConditionalCoeffs c;
            if (ell > 1)
                c = efgm::conditional_coeffs(
                    m, std::span<const double>(rebuilt.data(), rebuilt.size()), ell);
            rebuilt.push_back(efgm::invert_conditional(c, z[ell - 1]));
        }
        for (int j = 0; j < 4; ++j) CHECK_THAT(rebuilt[j], WithinAbs(u[j], 1e-10));
    }
}

TEST_CASE("rosenblatt under independence is the identity", "[sampling]")
{
    const auto m = efgm::CopulaModel::checked(efgm::ParamVector(3));
    const std::vector<double> u{0.12, 0.55, 0.93};
    const auto z = efgm::rosenblatt(m, u);
    for (int j = 0; j < 3; ++j) CHECK_THAT(z[j], WithinAbs(u[j], 1e-15));
}

TEST_CASE("rosenblatt coordinates of sampled rows are uniform", "[sampling]")
{
    efgm::ParamVector p(3);
    p.set(1, 3, 0.12);
    p.set(1, 6, -0.08);
    p.set(2, 7, 0.02);
    const auto m = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(m, 20000, 808, 2);
    for (int j = 0; j < 3; ++j) {
        std::vector<double> z(batch.n);
        for (std::size_t i = 0; i < batch.n; ++i) z[i] = efgm::rosenblatt(m, batch.row(i))[j];
        std::sort(z.begin(), z.end());
        double dn = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double lo = static_cast<double>(i) / static_cast<double>(z.size());
            const double hi = static_cast<double>(i + 1) / static_cast<double>(z.size());
            dn = std::max({dn, hi - z[i], z[i] - lo});
        }
        // 1% KS critical value is about 1.63/sqrt(n)
        CHECK(dn <= 1.63 / std::sqrt(static_cast<double>(batch.n)));
    }
}

TEST_CASE("zero-density prefix raises a dedicated error", "[sampling]")
{
    // lambda = 1/3 on the first pair makes c(0,1) = 1 + 3*(1/3)*(-1) = 0,
    // so conditioning coordinate 3 on that prefix is undefined.
    efgm::ParamVector p(3);
    p.set(1, 3, 1.0 / 3.0);
    const auto m = efgm::CopulaModel::checked(p);
    const std::vector<double> prefix{0.0, 1.0};
    CHECK_THROWS_AS(efgm::conditional_coeffs(m, prefix, 3), efgm::singular_prefix_error);
    try {
        efgm::conditional_coeffs(m, prefix, 3);
    } catch (const efgm::singular_prefix_error& e) {
        CHECK(std::string(e.what()).find("prefix") != std::string::npos);
    }
}

TEST_CASE("sample argument validation", "[sampling]")
{
    efgm::ParamVector p(2);
    p.set(1, 3, 0.1);
    const auto m = efgm::CopulaModel::checked(p);
    CHECK_THROWS_AS(efgm::sample(m, 0, 1), std::invalid_argument);
    CHECK_NOTHROW(efgm::sample(m, 1, 1));
}
