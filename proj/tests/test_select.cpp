#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "efgm/estimate.hpp"
#include "efgm/model.hpp"
#include "efgm/rng.hpp"
#include "efgm/sampling.hpp"
#include "efgm/select.hpp"
#include "models.hpp"

using Catch::Matchers::WithinAbs;

TEST_CASE("log-likelihood basics", "[select]")
{
    // independence model: density 1 everywhere, so the log-likelihood is 0
    const std::vector<double> rows{0.2, 0.9, 0.4, 0.1};
    const efgm::DataView data(rows, 2, 2);
    CHECK(efgm::loglik(efgm::ParamVector(2), data) == 0.0);

    // a first-family-only model at the half point: phi_1(1/2) = 0
    efgm::ParamVector p(2);
    p.set(1, 3, 0.2);
    const std::vector<double> half{0.5, 0.5};
    CHECK_THAT(efgm::loglik(p, efgm::DataView(half, 1, 2)), WithinAbs(0.0, 1e-15));

    // two corner rows under lambda = 0.3: each contributes log(1.9)
    efgm::ParamVector q(2);
    q.set(1, 3, 0.3);
    const std::vector<double> corners{1.0, 1.0, 0.0, 0.0};
    CHECK_THAT(efgm::loglik(q, efgm::DataView(corners, 2, 2)),
               WithinAbs(2.0 * std::log(1.9), 1e-12));
}

TEST_CASE("log-likelihood rejects nonpositive densities", "[select]")
{
    // an invalid parameter vector pushes the density negative at a corner
    efgm::ParamVector p(2);
    p.set(1, 3, 0.4);
    const std::vector<double> rows{0.5, 0.5, 0.0, 1.0};
    CHECK_THROWS_WITH(efgm::loglik(p, efgm::DataView(rows, 2, 2)),
                      Catch::Matchers::ContainsSubstring("row 2"));
}

TEST_CASE("active-parameter count", "[select]")
{
    efgm::ParamVector p(4);
    CHECK(efgm::count_active(p) == 0);
    p.set(1, 3, 0.1);
    p.set(2, 15, -1e-300);
    CHECK(efgm::count_active(p) == 2);
}

TEST_CASE("information criteria identities", "[select]")
{
    efgm::ParamVector p(2);
    p.set(1, 3, 0.3);
    const std::vector<double> corners{1.0, 1.0, 0.0, 0.0};
    const efgm::DataView data(corners, 2, 2);
    const auto s = efgm::score_params(p, data);
    CHECK(s.p_active == 1);
    CHECK(s.n == 2);
    CHECK_THAT(s.loglik, WithinAbs(2.0 * std::log(1.9), 1e-12));
    CHECK_THAT(s.aic, WithinAbs(-2.0 * s.loglik + 2.0, 1e-12));
    CHECK_THAT(s.bic, WithinAbs(-2.0 * s.loglik + std::log(2.0), 1e-12));

    const auto via_model = efgm::score(efgm::CopulaModel::checked(p), data);
    CHECK(via_model.aic == s.aic);
    CHECK(via_model.bic == s.bic);
}

TEST_CASE("reduction keeps significant coordinates verbatim", "[select]")
{
    efgm::EstimationResult res;
    res.params_hat = efgm::ParamVector(4);
    res.n = 1000;
    res.params_hat.set(1, 3, 0.123456789);
    res.params_hat.set(1, 5, 0.02);
    res.params_hat.set(2, 15, -0.04);
    res.se.assign(res.params_hat.count(), 0.03);
    res.pvalue.assign(res.params_hat.count(), 1.0);
    res.pvalue[res.params_hat.slot(1, 3)] = 0.001;
    res.pvalue[res.params_hat.slot(2, 15)] = 0.049;

    const auto red = efgm::reduce_model(res, 0.05);
    CHECK(red.get(1, 3) == 0.123456789);
    CHECK(red.get(2, 15) == -0.04);
    CHECK(red.get(1, 5) == 0.0);
    CHECK(efgm::count_active(red) == 2);

    // idempotent: reducing the reduced estimates changes nothing
    efgm::EstimationResult again = res;
    again.params_hat = red;
    CHECK(efgm::reduce_model(again, 0.05) == red);
}

TEST_CASE("classical projection zeroes the second family", "[select]")
{
    efgm::ParamVector p(3);
    p.set(1, 3, 0.11);
    p.set(2, 3, 0.07);
    p.set(2, 7, -0.02);
    const auto cls = efgm::classical_projection(p);
    CHECK(cls.get(1, 3) == 0.11);
    CHECK(cls.get(2, 3) == 0.0);
    CHECK(cls.get(2, 7) == 0.0);
}

TEST_CASE("goodness of fit accepts data from the fitted model", "[select]")
{
    efgm::ParamVector p(3);
    p.set(1, 3, 0.15);
    p.set(2, 6, -0.05);
    const auto m = efgm::CopulaModel::checked(p);
    const auto batch = efgm::sample(m, 4000, 345678, 2);
    const auto rep = efgm::gof(m, efgm::DataView(batch), 0.05);
    REQUIRE(rep.coords.size() == 3);
    CHECK(rep.coords[0].coordinate == 1);
    CHECK(rep.coords[2].coordinate == 3);
    // first coordinate of the transform is the raw first margin
    CHECK(rep.alpha == 0.05);
    for (const auto& c : rep.coords) CHECK(c.pvalue >= 0.0);
    CHECK(rep.pass);
}

TEST_CASE("goodness of fit rejects a model the data contradicts", "[select]")
{
    // data generated without dependence, candidate model with a strong pair
    // coefficient: the second conditional transform is visibly non-uniform
    const auto truth = efgm::CopulaModel::checked(efgm::ParamVector(2));
    const auto batch = efgm::sample(truth, 5000, 8642, 2);

    efgm::ParamVector wrong(2);
    wrong.set(1, 3, 0.3);
    const auto rep = efgm::gof(efgm::CopulaModel::checked(wrong), efgm::DataView(batch), 0.05);
    CHECK_FALSE(rep.pass);
    CHECK(rep.coords[1].pvalue < 0.01);
    // the first margin is untouched by the candidate model
    CHECK(rep.coords[0].pvalue > 0.01);
}

TEST_CASE("goodness of fit is calibrated under the null", "[select][slow]")
{
    // rejection frequency at alpha = 5% over independent replications stays
    // inside a wide binomial band
    efgm::ParamVector p(2);
    p.set(1, 3, 0.2);
    const auto m = efgm::CopulaModel::checked(p);
    int coord2 = 0, joint = 0;
    const int reps = 500;
    for (int r = 0; r < reps; ++r) {
        const auto batch = efgm::sample(m, 1000, efgm::substream(1001, r).next());
        const auto rep = efgm::gof(m, efgm::DataView(batch), 0.05);
        if (rep.coords[1].pvalue < 0.05) ++coord2;
        if (!rep.pass) ++joint;
    }
    // the conditional coordinate rejects at close to the nominal 5%
    CHECK(coord2 >= 10);
    CHECK(coord2 <= 45);
    // any-coordinate failures run near 1 - 0.95^2, give a generous band
    CHECK(joint >= 20);
    CHECK(joint <= 80);
}

TEST_CASE("deviation data is the sorted ecdf gap", "[select]")
{
    const std::vector<double> col{0.4, 0.1, 0.8};
    const auto dev = efgm::deviation_data(col);
    REQUIRE(dev.size() == 3);
    CHECK(dev[0].u == 0.1);
    CHECK_THAT(dev[0].dev, WithinAbs(1.0 / 3.0 - 0.1, 1e-15));
    CHECK(dev[1].u == 0.4);
    CHECK_THAT(dev[1].dev, WithinAbs(2.0 / 3.0 - 0.4, 1e-15));
    CHECK(dev[2].u == 0.8);
    CHECK_THAT(dev[2].dev, WithinAbs(1.0 - 0.8, 1e-15));
}
