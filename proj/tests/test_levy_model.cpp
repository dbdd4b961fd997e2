// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <numbers>

#include "mpcs/group_action.hpp"
#include "support.hpp"

using namespace mpcs;
using testing::uni;

namespace
{

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

//! Upper 1e-3 quantile of chi^2(k), Wilson-Hilferty
double chi2_critical(double k)
{
    double z = 3.090232;
    double c = 2 / (9 * k);
    return k * std::pow(1 - c + z * std::sqrt(c), 3);
}

LevyModel lognormal_model(double mu_slope)
{
    SpatialSpec sp;
    MarkSpec mk;
    mk.family = MarkFamily::lognormal;
    mk.mu = 0.1;
    mk.mu_slope = mu_slope;
    mk.sigma2 = 0.5;
    mk.profile = SpatialField::separable(1, {Factor::bump(0.5, 0.4)});
    return LevyModel(1, sp, mk);
}

LevyModel sloped_exponential()
{
    SpatialSpec sp;
    sp.level = 1.5;
    MarkSpec mk;
    mk.rate = 1.2;
    mk.rate_slope = 0.5;
    mk.profile = SpatialField::separable(1, {Factor::bump(0.5, 0.4)});
    return LevyModel(1, sp, mk);
}

LevyModel gaussian_gamma()
{
    SpatialSpec sp;
    sp.family = SpatialFamily::gaussian;
    sp.mean = Vec{0.4, 0, 0};
    sp.variance = 0.3;
    MarkSpec mk;
    mk.family = MarkFamily::gamma;
    mk.shape = 2.5;
    mk.rate = 1.5;
    return LevyModel(1, sp, mk);
}

}  // namespace

TEST_CASE("sigma_mass")
{
    auto m = testing::unit_model();
    CHECK(m.sigma_mass(Box::cube(1, 0, 1)) == doctest::Approx(1.0).epsilon(1e-15));
    auto c = LevyModel::uniform_exponential(Box::cube(2, 0, 2), 3, 0.7);
    CHECK(c.sigma_mass(Box::cube(2, 0, 2)) == doctest::Approx(12.0).epsilon(1e-14));
    // only the part of the window inside the support counts
    CHECK(c.sigma_mass(Box::cube(2, 1, 5)) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(m.sigma_mass(Box::cube(1, 0.5, 0.5)) == 0.0);

    // gaussian: level times the normal mass of the box
    auto g = LevyModel::solvable(2);
    double want = 2 * (normal_cdf(1) - normal_cdf(-0.5));
    CHECK(g.sigma_mass(Box::cube(1, -0.5, 1)) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("mark densities are normalized")
{
    for (auto const& m : {testing::unit_model(), sloped_exponential(),
                          gaussian_gamma(), lognormal_model(0.8)})
    {
        for (double x : {0.3, 0.5})
        {
            auto f = [&](double u) {
                double s = std::exp(u);
                return m.mark_density(MarkedPoint{{x, 0, 0}, s}) * s;
            };
            auto rule = composite_gauss_legendre(32, -30, 6, {-5, -1, 0, 1, 2});
            double total = 0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
                total += rule.weights[i] * f(rule.nodes[i]);
            CHECK(std::abs(total - 1) <= 1e-10);
        }
    }
}

TEST_CASE("sample_point: means and window")
{
    auto m = testing::unit_model();
    auto ln = LevyModel(1, SpatialSpec{}, MarkSpec{MarkFamily::lognormal});
    auto gg = gaussian_gamma();
    Box w = Box::cube(1, 0, 1);
    Box wg = Box::cube(1, -1, 2);
    std::vector<double> s, logs, gam;
    bool inside = true;
    for (std::uint64_t i = 0; i < 100000; ++i)
    {
        Rng r(11, stream_id("levy"), i);
        auto p = m.sample_point(w, r);
        auto q = ln.sample_point(w, r);
        auto g = gg.sample_point(wg, r);
        inside = inside && w.contains(p.x) && w.contains(q.x) && wg.contains(g.x);
        s.push_back(p.s);
        logs.push_back(std::log(q.s));
        gam.push_back(g.s);
    }
    CHECK(inside);
    CHECK(with_target(summarize(s), 1.0).pass);
    CHECK(with_target(summarize(logs), 0.0).pass);
    CHECK(with_target(summarize(gam), 2.5 / 1.5).pass);

    Rng r(12, 1);
    CHECK_THROWS_AS(m.sample_point(Box::cube(1, 2, 3), r), Error);
}

TEST_CASE("sample_point passes chi-square on a 20 x 20 grid")
{
    // Probability integral transform of (x, s) is uniform on the unit square
    struct Case
    {
        LevyModel model;
        Box window;
        std::function<double(double)> fx;
        std::function<double(double, double)> fs;
    };
    auto ln = lognormal_model(0.8);
    auto ex = sloped_exponential();
    auto gg = gaussian_gamma();
    double g_lo = normal_cdf((-0.5 - 0.4) / std::sqrt(0.3));
    double g_hi = normal_cdf((1.5 - 0.4) / std::sqrt(0.3));
    std::vector<Case> cases{
        {ln, Box::cube(1, 0, 1), [](double x) { return x; },
         [&](double x, double s) {
             return normal_cdf((std::log(s) - ln.mu_at(Vec{x, 0, 0})) / std::sqrt(0.5));
         }},
        {ex, Box::cube(1, 0, 1), [](double x) { return x; },
         [&](double x, double s) {
             return 1 - std::exp(-ex.rate_at(Vec{x, 0, 0}) * s);
         }},
        // gamma marks are checked through the spatial part only
        {gg, Box::cube(1, -0.5, 1.5),
         [&](double x) {
             return (normal_cdf((x - 0.4) / std::sqrt(0.3)) - g_lo) / (g_hi - g_lo);
         },
         [](double, double s) { return 1 - std::exp(-s); }},
    };
    for (std::size_t c = 0; c < cases.size(); ++c)
    {
        auto const& cs = cases[c];
        int bins = 20;
        std::size_t n = 100000;
        std::vector<double> hist(bins * bins, 0);
        for (std::size_t i = 0; i < n; ++i)
        {
            Rng r(13, stream_id("chi2", c), i);
            auto p = cs.model.sample_point(cs.window, r);
            double u = cs.fx(p.x[0]);
            double v = c == 2 ? r.uniform() : cs.fs(p.x[0], p.s);
            int a = std::min(bins - 1, static_cast<int>(u * bins));
            int b = std::min(bins - 1, static_cast<int>(v * bins));
            hist[a * bins + b] += 1;
        }
        double expect = static_cast<double>(n) / (bins * bins);
        double chi2 = 0;
        for (double h : hist)
            chi2 += (h - expect) * (h - expect) / expect;
        CHECK(chi2 <= chi2_critical(bins * bins - 1));
    }
}

TEST_CASE("beta_point closed forms")
{
    Rng r(14, 1);
    auto xi = testing::random_lie(r);
    auto ln = LevyModel(1, SpatialSpec{}, MarkSpec{MarkFamily::lognormal});
    auto ex = testing::unit_model();
    CHECK(beta_point(LieElement::zero(1), ex, MarkedPoint{{0.4, 0, 0}, 1.3}) == 0.0);
    auto cur = xi.current_part();
    for (double s : {0.3, 1.0, 2.7})
    {
        MarkedPoint p{{0.45, 0, 0}, s};
        double a = cur.jet(p.x).a;
        CHECK(beta_point(cur, ln, p) == doctest::Approx(-a * std::log(s)).epsilon(1e-13));
        CHECK(beta_point(cur, ex, p) == doctest::Approx(a * (1 - s)).epsilon(1e-13));
    }
    CHECK(beta_point(cur, ln, MarkedPoint{{0.45, 0, 0}, 1}) == doctest::Approx(0.0).epsilon(1e-15));
    // (v, a) nonzero where q vanishes; zero where (v, a) vanish
    CHECK_THROWS_AS(beta_point(testing::plateau_lie(0, 1), ex, MarkedPoint{{-0.5, 0, 0}, 1}), Error);
    CHECK(beta_point(xi, ex, MarkedPoint{{3, 0, 0}, 1}) == 0.0);
}

TEST_CASE("beta_point is the log-derivative of the image density")
{
    // d/dt log[q(g_t p) |det D g_t(p)|] at t = 0
    Rng r(15, 1);
    std::vector<LevyModel> models{testing::unit_model(2), sloped_exponential(),
                                  gaussian_gamma(), lognormal_model(0.8),
                                  LevyModel::solvable()};
    double worst = 0;
    for (auto const& m : models)
    {
        for (int k = 0; k < 10; ++k)
        {
            auto xi = testing::random_lie(r);
            auto p = testing::random_point(r);
            FlowOptions fo{1e-4, 10};
            auto h = [&](double t) {
                auto img = act_point_with_jacobian(GroupElement::from_lie(xi, t, fo), p);
                return std::log(m.q(img.p) * img.jacobian);
            };
            double e = 1e-3;
            double fd = (8 * (h(e) - h(-e)) - (h(2 * e) - h(-2 * e))) / (12 * e);
            worst = std::max(worst, testing::rel_err(beta_point(xi, m, p), fd));
        }
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("log_derivatives match finite differences of log q")
{
    Rng r(16, 1);
    std::vector<LevyModel> models{sloped_exponential(), gaussian_gamma(),
                                  lognormal_model(0.8)};
    double worst = 0;
    for (auto const& m : models)
    {
        for (int k = 0; k < 50; ++k)
        {
            auto p = testing::random_point(r);
            auto d = m.log_derivatives(p);
            double h = 1e-6;
            auto lq = [&](double dx, double ds) {
                return std::log(m.q(MarkedPoint{{p.x[0] + dx, 0, 0}, p.s + ds}));
            };
            worst = std::max(worst, testing::rel_err(d.grad_x[0], (lq(h, 0) - lq(-h, 0)) / (2 * h)));
            worst = std::max(worst, testing::rel_err(d.s_ds, p.s * (lq(0, h) - lq(0, -h)) / (2 * h)));
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("base integration by parts")
{
    Rng r(17, 1);
    auto m = sloped_exponential();
    auto ln = lognormal_model(0.8);
    auto phi = testing::random_phi(r);
    auto xi = testing::random_lie(r);
    CHECK(base_ibp_residual(xi, TestFunction::zero(1), phi, m) == 0.0);
    CHECK(base_ibp_residual(LieElement::zero(1), phi, phi, m) == 0.0);
    double worst = 0;
    for (int k = 0; k < 10; ++k)
    {
        auto const& model = k % 2 ? m : ln;
        auto a = testing::random_phi(r, 1, k % 3 == 0);
        auto b = testing::random_phi(r, 1, k % 3 == 1);
        auto x = testing::random_lie(r);
        worst = std::max(worst, std::abs(base_ibp_residual(x, a, b, model)));
    }
    CHECK(worst <= 1e-6);

    // integrating against the wrong density breaks the identity
    auto wrong = [](const MarkedPoint& p) { return std::exp(-2 * p.s) * (1 + p.x[0]); };
    auto a = testing::random_phi(r);
    CHECK(std::abs(base_ibp_residual(xi, a, a, m, 64, wrong)) >= 1e-4);
}
