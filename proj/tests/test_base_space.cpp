// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "mpcs/quadrature.hpp"
#include "support.hpp"

using namespace mpcs;
using testing::uni;

TEST_CASE("flow: zero time and zero field leave the point")
{
    Rng r(1, 1);
    auto xi = testing::random_lie(r);
    Vec x{0.4, 0, 0};
    CHECK(flow(xi, 0, x)[0] == x[0]);
    CHECK(flow(LieElement::zero(1), 0.7, x)[0] == x[0]);
    auto j = flow_jacobian(LieElement::zero(1), 0.7, x);
    CHECK(j[0][0] == 1.0);
}

TEST_CASE("flow on a constant plateau is a translation")
{
    auto xi = testing::plateau_lie(1, 0);
    auto st = flow_with_jacobian(xi, 0.1, Vec{0, 0, 0});
    CHECK(std::abs(st.x[0] - 0.1) <= 1e-9);
    CHECK(std::abs(st.jacobian[0][0] - 1) <= 1e-9);
    CHECK(flow_jacobian(xi, 0, Vec{0.3, 0, 0})[0][0] == 1.0);
}

TEST_CASE("current")
{
    auto xi = testing::plateau_lie(0, 2);
    CHECK(current(xi, 0, Vec{0.2, 0, 0}) == 1.0);
    CHECK(current(xi, 0.5, Vec{0.2, 0, 0}) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    CHECK(current(xi, 0.5, Vec{3, 0, 0}) == 1.0);
    CHECK(current(LieElement::zero(1), 0.5, Vec{0.2, 0, 0}) == 1.0);
}

TEST_CASE("directional_derivative_base matches a flow finite difference")
{
    Rng r(2, 1);
    for (int dim = 1; dim <= 2; ++dim)
    {
        for (int k = 0; k < 20; ++k)
        {
            auto xi = testing::random_lie(r, dim);
            auto phi = testing::random_phi(r, dim, k % 2 == 1);
            auto p = testing::random_point(r, dim);
            double h = 1e-4;
            auto along = [&](double t) {
                auto y = flow(xi, t, p.x);
                MarkedPoint q{y, std::exp(t * xi.current_exponent(y)) * p.s};
                return phi(q);
            };
            double fd = (along(h) - along(-h)) / (2 * h);
            double an = directional_derivative_base(xi, phi, p);
            CHECK(testing::rel_err(an, fd) <= 1e-6);
        }
    }
    auto phi = testing::random_phi(r);
    auto p = testing::random_point(r);
    CHECK(directional_derivative_base(LieElement::zero(1), phi, p) == 0.0);

    // phi without mark dependence ignores the current
    auto flat = TestFunction::separable(1, {Factor::bump(0.5, 0.3)},
                                        Factor::constant(1));
    auto xi = testing::random_lie(r);
    auto j = flat.jet(p);
    CHECK(directional_derivative_base(xi, flat, p) == doctest::Approx(j.grad[0] * xi.velocity(p.x)[0]).epsilon(1e-14));
}

TEST_CASE("integrate on the unit window")
{
    QuadratureSpec spec;
    spec.x_box = Box::cube(1, 0, 1);
    spec.s_lo = 0;
    spec.s_hi = 1;
    spec.order = 8;
    QuadratureRule rule(spec);
    CHECK(integrate([](const MarkedPoint&) { return 0.0; }, rule) == 0.0);
    CHECK(std::abs(integrate([](const MarkedPoint&) { return 1.0; }, rule) - 1) <= 1e-12);
    CHECK(std::abs(integrate([](const MarkedPoint& p) { return p.x[0] * p.s; }, rule) - 0.25) <= 1e-12);
    for (auto const& n : rule.nodes())
        CHECK(n.w > 0);
    // declared order: degree 2n - 1 is exact
    double m = integrate([](const MarkedPoint& p) { return std::pow(p.x[0], 15) * std::pow(p.s, 14); }, rule);
    CHECK(std::abs(m - 1.0 / (16 * 15)) <= 1e-12);
    CHECK_THROWS_AS(integrate([](const MarkedPoint&) { return std::nan(""); }, rule), Error);
}

TEST_CASE("Gauss-Hermite rule integrates normal moments")
{
    for (int n : {8, 40, 96})
    {
        auto rule = gauss_hermite_normal(n);
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        {
            double x = rule.nodes[i];
            m0 += rule.weights[i];
            m2 += rule.weights[i] * x * x;
            m4 += rule.weights[i] * x * x * x * x;
        }
        CHECK(std::abs(m0 - 1) <= 1e-13);
        CHECK(std::abs(m2 - 1) <= 1e-13);
        CHECK(std::abs(m4 - 3) <= 1e-12);
    }
    // E[exp(X)] = e^{1/2}, tail weights matter here
    auto rule = gauss_hermite_normal(96);
    double e = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        e += rule.weights[i] * std::exp(rule.nodes[i]);
    CHECK(std::abs(e - std::exp(0.5)) <= 1e-13);
}

TEST_CASE("flow group law, inverse and Jacobian cocycle")
{
    Rng r(3, 1);
    double worst_law = 0, worst_inv = 0, worst_jac = 0;
    for (int k = 0; k < 100; ++k)
    {
        int dim = 1 + k % 2;
        auto xi = testing::random_lie(r, dim, true, false);
        Vec x{uni(r, 0.2, 0.8), dim > 1 ? uni(r, 0.2, 0.8) : 0, 0};
        double t1 = uni(r, -1, 1);
        double t2 = uni(r, -1, 1);
        auto direct = flow_with_jacobian(xi, t1 + t2, x);
        auto inner = flow_with_jacobian(xi, t2, x);
        auto outer = flow_with_jacobian(xi, t1, inner.x);
        worst_law = std::max(worst_law, norm(direct.x - outer.x));
        worst_inv = std::max(worst_inv, norm(flow(xi, -t1, flow(xi, t1, x)) - x));
        double dj = determinant(direct.jacobian);
        worst_jac = std::max(worst_jac, std::abs(dj - determinant(outer.jacobian) * determinant(inner.jacobian)));
        CHECK(dj > 0);
    }
    CHECK(worst_law <= 1e-8);
    CHECK(worst_inv <= 1e-8);
    CHECK(worst_jac <= 1e-7);
}

TEST_CASE("test function derivatives agree with central differences")
{
    Rng r(4, 1);
    double worst = 0;
    for (int k = 0; k < 1000; ++k)
    {
        int dim = 1 + k % 3;
        auto phi = testing::random_phi(r, dim, k % 2 == 0);
        auto sup = phi.support();
        MarkedPoint p;
        // interior probes: stencils must not straddle the C^2 seam
        auto inner = [&](double lo, double hi) {
            double m = 0.05 * (hi - lo);
            return uni(r, lo + m, hi - m);
        };
        for (int i = 0; i < dim; ++i)
            p.x[i] = inner(sup.x.lo[i], sup.x.hi[i]);
        p.s = inner(sup.s_lo, sup.s_hi);
        auto j = phi.jet(p);
        double h = 1e-5;
        double lap = 0;
        for (int i = 0; i < dim; ++i)
        {
            auto a = p, b = p;
            a.x[i] += h;
            b.x[i] -= h;
            worst = std::max(worst, testing::rel_err(j.grad[i], (phi(a) - phi(b)) / (2 * h)));
            double h2 = 1e-4;
            a = p;
            b = p;
            a.x[i] += h2;
            b.x[i] -= h2;
            lap += (phi(a) - 2 * phi(p) + phi(b)) / (h2 * h2);
        }
        auto a = p, b = p;
        a.s += h;
        b.s -= h;
        worst = std::max(worst, testing::rel_err(j.ds, (phi(a) - phi(b)) / (2 * h)));
        double h2 = 1e-4;
        a = p;
        b = p;
        a.s += h2;
        b.s -= h2;
        worst = std::max(worst, testing::rel_err(j.dss, (phi(a) - 2 * phi(p) + phi(b)) / (h2 * h2)) / 10);
        worst = std::max(worst, testing::rel_err(j.lap, lap) / 10);
    }
    // second differences lose digits; they are held to 1e-4
    CHECK(worst <= 1e-5);
}

TEST_CASE("test functions vanish outside their support")
{
    Rng r(5, 1);
    for (int k = 0; k < 50; ++k)
    {
        auto phi = testing::random_phi(r, 2, k % 2 == 0);
        auto sup = phi.support();
        CHECK(sup.s_lo > 0);
        CHECK(std::isfinite(sup.s_hi));
        MarkedPoint out{{sup.x.hi[0] + 0.01, 0.5, 0}, 1};
        auto j = phi.jet(out);
        CHECK(j.value == 0);
        CHECK(j.ds == 0);
        CHECK(j.lap == 0);
        MarkedPoint low{{0.5, 0.5, 0}, sup.s_lo * 0.5};
        CHECK(phi(low) == 0);
    }
}

TEST_CASE("Lie element divergence is the Jacobian trace")
{
    Rng r(6, 1);
    for (int k = 0; k < 30; ++k)
    {
        int dim = 1 + k % 3;
        auto xi = testing::random_lie(r, dim);
        Vec x{uni(r, 0.2, 0.8), uni(r, 0.2, 0.8), dim > 2 ? uni(r, 0.2, 0.8) : 0};
        if (dim < 2)
            x[1] = 0;
        auto j = xi.jet(x);
        CHECK(std::abs(j.div - trace(j.dv)) <= 1e-14);
        auto far = xi.jet(Vec{5, dim > 1 ? 5.0 : 0.0, 0});
        CHECK(far.a == 0);
        CHECK(norm(far.v) == 0);
    }
}

TEST_CASE("Hermite factor is He_n")
{
    auto he3 = Factor::hermite(3);
    for (double y : {-1.3, 0.0, 0.4, 2.0})
    {
        auto j = he3.jet(y);
        CHECK(j.v == doctest::Approx(y * y * y - 3 * y).epsilon(1e-14));
        CHECK(j.d1 == doctest::Approx(3 * y * y - 3).epsilon(1e-14));
        CHECK(j.d2 == doctest::Approx(6 * y).epsilon(1e-14));
    }
}
