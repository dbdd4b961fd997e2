// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mpcs/group_action.hpp"
#include "mpcs/quadrature.hpp"
#include "support.hpp"

using namespace mpcs;
using testing::uni;

namespace
{

const FlowOptions kFlow{1e-2, 10};

GroupElement random_g(Rng& r, int dim = 1)
{
    return GroupElement::from_lie(testing::random_lie(r, dim), uni(r, 0.5, 1.5), kFlow);
}

double dist(const MarkedPoint& a, const MarkedPoint& b)
{
    return norm(a.x - b.x) + std::abs(a.s - b.s);
}

}  // namespace

TEST_CASE("compose and inverse")
{
    Rng r(31, 1);
    // pure currents multiply
    auto c1 = GroupElement::from_lie(testing::plateau_lie(0, 0.3), 1, kFlow);
    auto c2 = GroupElement::from_lie(testing::plateau_lie(0, -0.7), 1, kFlow);
    MarkedPoint p{{0.2, 0, 0}, 1.5};
    CHECK(act_point(compose(c1, c2), p).s == doctest::Approx(1.5 * std::exp(-0.4)).epsilon(1e-14));
    CHECK(act_point(inverse(c1), p).s == doctest::Approx(1.5 / std::exp(0.3)).epsilon(1e-14));
    CHECK(inverse(GroupElement::identity(1)).is_identity());

    // (psi, 1)(id, theta) = (psi, theta o psi^{-1}): the mark picks up theta(x)
    auto xi = testing::random_lie(r);
    auto flow_only = GroupElement::from_lie(xi.vector_part(), 1, kFlow);
    auto cur_only = GroupElement::from_lie(xi.current_part(), 1, kFlow);
    auto img = act_point(compose(flow_only, cur_only), p);
    CHECK(std::abs(img.s - p.s * std::exp(xi.jet(p.x).a)) <= 1e-12);
    CHECK(norm(img.x - act_point(flow_only, p).x) <= 1e-14);

    double worst_left = 0, worst_inv = 0;
    for (int k = 0; k < 100; ++k)
    {
        int dim = 1 + k % 2;
        auto g1 = random_g(r, dim);
        auto g2 = random_g(r, dim);
        auto q = testing::random_point(r, dim);
        worst_left = std::max(worst_left, dist(act_point(compose(g1, g2), q), act_point(g1, act_point(g2, q))));
        worst_inv = std::max(worst_inv, dist(act_point(inverse(g1), act_point(g1, q)), q));
    }
    CHECK(worst_left <= 1e-9);
    CHECK(worst_inv <= 1e-9);
}

TEST_CASE("act_point and act_config")
{
    Rng r(32, 1);
    MarkedPoint p{{0.3, 0, 0}, 1};
    auto two = GroupElement::from_lie(testing::plateau_lie(0, std::log(2.0)), 1, kFlow);
    CHECK(act_point(two, p).s == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(act_point(GroupElement::identity(1), p).s == 1.0);
    auto g = random_g(r);
    MarkedPoint far{{4, 0, 0}, 0.7};
    CHECK(!g.support().contains(far.x));
    CHECK(act_point(g, far).x[0] == 4.0);
    CHECK(act_point(g, far).s == 0.7);

    CHECK(act_config(g, MarkedConfiguration{}).empty());
    for (int k = 0; k < 20; ++k)
    {
        auto w = testing::random_config(r, k % 8);
        CHECK(act_config(GroupElement::identity(1), w) == w);
        CHECK(act_config(g, w).size() == w.size());
    }
}

TEST_CASE("rn_point")
{
    auto m = testing::unit_model();
    Rng r(33, 1);
    CHECK(rn_point(GroupElement::identity(1), m, MarkedPoint{{0.4, 0, 0}, 2}) == 1.0);
    auto two = GroupElement::from_lie(testing::plateau_lie(0, std::log(2.0)), 1, kFlow);
    CHECK(rn_point(two, m, MarkedPoint{{0.3, 0, 0}, 1}) == doctest::Approx(std::exp(0.5) / 2).epsilon(1e-13));
    CHECK(std::abs(rn_point(two, m, MarkedPoint{{0.3, 0, 0}, 1}) - 0.82436) <= 1e-5);

    // exactly one outside K_g
    for (int k = 0; k < 20; ++k)
    {
        auto g = random_g(r);
        auto k_g = g.support();
        MarkedPoint out{{k_g.hi[0] + uni(r, 0, 1), 0, 0}, uni(r, 0.1, 3)};
        CHECK(rn_point(g, LevyModel::solvable(), out) == 1.0);
    }
    CHECK(rn_config(random_g(r), m, MarkedConfiguration{}) == 1.0);
    auto w = testing::random_config(r, 4);
    CHECK(rn_config(GroupElement::identity(1), m, w) == 1.0);
}

TEST_CASE("rn_point: change of variables by quadrature")
{
    // int phi(g p) d sigma = int phi(p) rn(g, p) d sigma on a model with q > 0
    auto m = LevyModel::solvable();
    Rng r(34, 1);
    double worst = 0;
    for (int k = 0; k < 6; ++k)
    {
        auto g = random_g(r);
        auto phi = testing::random_phi(r, 1, true);
        // outside K_g both integrands agree pointwise
        QuadratureSpec spec;
        spec.x_box = g.support();
        spec.s_lo = std::exp(-2.2);
        spec.s_hi = std::exp(2.2);
        spec.log_marks = true;
        spec.order = 8;
        for (int j = 1; j < 16; ++j)
            spec.x_breaks[0].push_back(spec.x_box.lo[0] + (spec.x_box.hi[0] - spec.x_box.lo[0]) * j / 16);
        for (int j = 1; j < 16; ++j)
            spec.s_breaks.push_back(std::exp(-2.2 + 4.4 * j / 16));
        QuadratureRule rule(spec);
        double lhs = integrate_sigma([&](const MarkedPoint& p) { return phi(act_point(g, p)); }, m, rule);
        double rhs = integrate_sigma([&](const MarkedPoint& p) { return phi(p) * rn_point(g, m, p); }, m, rule);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("quasiinvariance and image-measure Laplace functional")
{
    auto m = testing::unit_model(2);
    Box w = Box::cube(1, 0, 1);
    Rng r(35, 1);
    std::size_t n = 20000;
    for (int k = 0; k < 5; ++k)
    {
        // the last fixtures carry flow and current together
        auto xi = testing::random_lie(r, 1, k != 0, k != 1);
        auto g = GroupElement::from_lie(xi, 1, kFlow);
        auto phi = testing::random_phi(r);
        auto f = [&](const MarkedConfiguration& om) { return std::sin(1 + pair(phi, om)); };
        auto est = paired_estimate(
            [&](Rng& rr) { return sample_poisson(m, w, rr); },
            [&](const MarkedConfiguration& om) { return f(act_config(g, om)); },
            [&](const MarkedConfiguration& om) { return f(om) * rn_config(g, m, om); },
            n, RngSpec{36, stream_id("quasi", k)}, 1);
        CHECK(with_target(est, 0.0).pass);
    }

    auto g = random_g(r);
    auto phi = TestFunction::separable(-0.8, {Factor::bump(0.5, 0.35)}, Factor::bump(1, 0.7));
    // marks of phi o g stay below 1.7 e^{0.9}
    QuadratureSpec spec = spec_for_support(MarkedBox{w, 0, 4.5}, 8);
    for (int j = 1; j < 16; ++j)
        spec.x_breaks[0].push_back(j / 16.0);
    for (int j = 1; j < 16; ++j)
        spec.s_breaks.push_back(4.5 * j / 16);
    double closed = std::exp(integrate_sigma(
        [&](const MarkedPoint& p) { return std::expm1(phi(act_point(g, p))); }, m, QuadratureRule(spec)));
    auto est = estimate(
        [&](Rng& rr) { return sample_poisson(m, w, rr); },
        [&](const MarkedConfiguration& om) { return std::exp(pair(phi, act_config(g, om))); },
        n, RngSpec{37, 1}, 1);
    CHECK(with_target(est, closed).pass);
}

TEST_CASE("unitary representation")
{
    auto m = testing::unit_model(2);
    Box w = Box::cube(1, 0, 1);
    Rng r(38, 1);
    auto phi = testing::random_phi(r);
    ConfigFunctional f = [&](const MarkedConfiguration& om) { return std::cos(pair(phi, om)) + 0.5; };
    ConfigFunctional one = [](const MarkedConfiguration&) { return 1.0; };
    auto g1 = random_g(r);
    auto g2 = random_g(r);

    double worst = 0;
    for (int k = 0; k < 20; ++k)
    {
        auto om = testing::random_config(r, k % 5);
        CHECK(unitary_rep(GroupElement::identity(1), m, f, om) == f(om));
        ConfigFunctional v2 = [&](const MarkedConfiguration& o) { return unitary_rep(g2, m, f, o); };
        double lhs = unitary_rep(g1, m, v2, om);
        double rhs = unitary_rep(compose(g1, g2), m, f, om);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    CHECK(worst <= 1e-8);

    auto sampler = [&](Rng& rr) { return sample_poisson(m, w, rr); };
    auto sq = [&](const ConfigFunctional& h) {
        return [&](const MarkedConfiguration& om) {
            double v = unitary_rep(g1, m, h, om);
            return v * v;
        };
    };
    CHECK(with_target(estimate(sampler, sq(one), 20000, RngSpec{39, 1}, 1), 1.0).pass);
    auto lhs = estimate(sampler, sq(f), 20000, RngSpec{39, 2}, 1);
    auto rhs = estimate(sampler, [&](const MarkedConfiguration& om) { return f(om) * f(om); },
                        20000, RngSpec{39, 3}, 1);
    CHECK(with_target(difference(lhs, rhs), 0.0).pass);
}

TEST_CASE("compound density")
{
    auto m = testing::unit_model();
    Rng r(40, 1);
    auto g = random_g(r);
    CHECK(compound_density(g, m, CompoundMeasure{}) == 1.0);
    for (int k = 0; k < 10; ++k)
    {
        auto om = testing::random_config(r, k % 5);
        CHECK(compound_density(g, m, to_compound(om)) == rn_config(g, m, om));
        CHECK(compound_density(GroupElement::identity(1), m, to_compound(om)) == 1.0);
    }
}
