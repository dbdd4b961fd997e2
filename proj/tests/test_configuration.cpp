// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "support.hpp"

using namespace mpcs;
using testing::uni;

namespace
{

constexpr std::size_t kDraws = 100000;

template<class Fn>
std::vector<double> draws(std::uint64_t stream, Fn&& fn)
{
    std::vector<double> out;
    out.reserve(kDraws);
    for (std::size_t i = 0; i < kDraws; ++i)
    {
        Rng r(21, stream, i);
        out.push_back(fn(r));
    }
    return out;
}

}  // namespace

TEST_CASE("configurations are canonical and reject coincident points")
{
    MarkedConfiguration a({{{0.7, 0, 0}, 1}, {{0.2, 0, 0}, 2}}, 1);
    MarkedConfiguration b({{{0.2, 0, 0}, 2}, {{0.7, 0, 0}, 1}}, 1);
    CHECK(a == b);
    CHECK(a[0].x[0] == 0.2);
    CHECK_THROWS_AS(MarkedConfiguration({{{0.2, 0, 0}, 1}, {{0.2 + 1e-13, 0, 0}, 3}}, 1), Error);
    CHECK_THROWS_AS(a.with_point({{0.7, 0, 0}, 5}), Error);
    CHECK(a.with_point({{0.5, 0, 0}, 5}).size() == 3);
    MarkedConfiguration c({{{0.9, 0, 0}, 1}}, 1);
    CHECK(a.merged(c) == a.with_point({{0.9, 0, 0}, 1}));
}

TEST_CASE("pair")
{
    Rng r(22, 1);
    auto f = [](const MarkedPoint& p) { return p.x[0] * p.s; };
    auto g = [](const MarkedPoint& p) { return std::sin(p.s); };
    CHECK(pair(f, MarkedConfiguration{}) == 0.0);
    MarkedPoint p0{{0.3, 0, 0}, 1.7};
    CHECK(pair(f, MarkedConfiguration({p0}, 1)) == f(p0));
    for (int k = 0; k < 20; ++k)
    {
        auto w = testing::random_config(r, 1 + k % 7);
        double sum = pair([&](const MarkedPoint& p) { return f(p) + g(p); }, w);
        double f_w = pair(f, w);
        double g_w = pair(g, w);
        CHECK(std::abs(sum - (f_w + g_w)) <= 1e-15 * (1 + std::abs(sum)));
    }
    auto bad = [](const MarkedPoint&) { return std::nan(""); };
    CHECK_THROWS_AS(pair(bad, MarkedConfiguration({p0}, 1)), Error);
}

TEST_CASE("count")
{
    Rng r(23, 1);
    MarkedBox all{Box::cube(1, -1, 2), 0, kInf};
    CHECK(count(all, MarkedConfiguration{}) == 0);
    for (int k = 0; k < 20; ++k)
    {
        auto w = testing::random_config(r, k);
        CHECK(count(all, w) == w.size());
        MarkedBox b1{Box::cube(1, 0, 0.5), 0, 1};
        MarkedBox b2{Box::cube(1, 0.5, 1), 0, 1};
        MarkedBox both{Box::cube(1, 0, 1), 0, 1};
        CHECK(count(both, w) == count(b1, w) + count(b2, w));
    }
    // half-open boxes
    MarkedConfiguration edge({{{0.5, 0, 0}, 1}}, 1);
    CHECK(count(MarkedBox{Box::cube(1, 0, 0.5), 0, 2}, edge) == 0);
    CHECK(count(MarkedBox{Box::cube(1, 0.5, 1), 0, 2}, edge) == 1);
}

TEST_CASE("sample_poisson: count and empty probability")
{
    auto m = testing::unit_model();
    Box w = Box::cube(1, 0, 1);
    auto n = draws(1, [&](Rng& r) { return static_cast<double>(sample_poisson(m, w, r).size()); });
    CHECK(with_target(summarize(n), 1.0).pass);
    auto e = draws(2, [&](Rng& r) { return sample_poisson(m, w, r).empty() ? 1.0 : 0.0; });
    CHECK(with_target(summarize(e), std::exp(-1.0)).pass);

    auto zero = LevyModel::uniform_exponential(Box::cube(1, 0, 1), 0);
    Rng r(24, 1);
    for (int k = 0; k < 10; ++k)
        CHECK(sample_poisson(zero, w, r).empty());
}

TEST_CASE("count moments and independence on disjoint boxes")
{
    auto m = LevyModel::uniform_exponential(Box::cube(1, 0, 1), 3, 1);
    Box w = Box::cube(1, 0, 1);
    MarkedBox b1{Box::cube(1, 0, 0.4), 0.5, 2};
    MarkedBox b2{Box::cube(1, 0.4, 1), 0, kInf};
    double mass1 = 3 * 0.4 * (std::exp(-0.5) - std::exp(-2.0));
    double mass2 = 3 * 0.6;
    std::vector<double> n1, n2, c1sq, cross;
    for (std::size_t i = 0; i < kDraws; ++i)
    {
        Rng r(25, 1, i);
        auto om = sample_poisson(m, w, r);
        double a = static_cast<double>(count(b1, om));
        double b = static_cast<double>(count(b2, om));
        n1.push_back(a);
        n2.push_back(b);
        c1sq.push_back((a - mass1) * (a - mass1));
        cross.push_back((a - mass1) * (b - mass2));
    }
    CHECK(with_target(summarize(n1), mass1).pass);
    CHECK(with_target(summarize(n2), mass2).pass);
    CHECK(with_target(summarize(c1sq), mass1).pass);
    CHECK(with_target(summarize(cross), 0.0).pass);
}

TEST_CASE("Laplace functional")
{
    auto m = LevyModel::uniform_exponential(Box::cube(1, 0, 1), 2, 1);
    Box w = Box::cube(1, 0, 1);
    auto phi = TestFunction::separable(-0.9, {Factor::bump(0.5, 0.4)}, Factor::bump(1, 0.8));
    double closed = std::exp(integrate_sigma(
        [&](const MarkedPoint& p) { return std::expm1(phi(p)); }, m, rule_for(phi)));
    auto v = draws(3, [&](Rng& r) { return std::exp(pair(phi, sample_poisson(m, w, r))); });
    CHECK(with_target(summarize(v), closed).pass);
}

TEST_CASE("mixed measure")
{
    auto m = testing::unit_model();
    Box w = Box::cube(1, 0, 1);
    MixingLaw nu({{1, 0.5}, {2, 0.5}});
    CHECK(nu.mean() == 1.5);
    auto n = draws(4, [&](Rng& r) { return static_cast<double>(sample_mixed(m, nu, w, r).second.size()); });
    CHECK(with_target(summarize(n), 1.5).pass);
    std::vector<double> dev;
    for (double x : n)
        dev.push_back((x - 1.5) * (x - 1.5));
    CHECK(with_target(summarize(dev), 1.75).pass);

    Rng r(26, 1);
    for (int k = 0; k < 10; ++k)
    {
        auto [z, om] = sample_mixed(m, MixingLaw::dirac(0), w, r);
        CHECK(z == 0);
        CHECK(om.empty());
    }
    // nu = delta_1 reads the same stream as sample_poisson after z
    for (std::uint64_t i = 0; i < 20; ++i)
    {
        Rng a(27, 1, i);
        Rng b(27, 1, i);
        auto mixed = sample_mixed(m, MixingLaw::dirac(1), w, a).second;
        MixingLaw::dirac(1).sample(b);
        CHECK(mixed == sample_poisson(m, w, b));
    }
}

TEST_CASE("compound measure bijection")
{
    Rng r(28, 1);
    CHECK(to_compound(MarkedConfiguration{}).atoms.empty());
    CHECK(from_compound(CompoundMeasure{}).empty());
    auto u = [](const Vec& x) { return std::cos(3 * x[0]) + x[1]; };
    for (int k = 0; k < 20; ++k)
    {
        auto w = testing::random_config(r, k % 6, 1 + k % 2);
        CHECK(from_compound(to_compound(w)) == w);
        double lhs = pair_compound(u, to_compound(w));
        double rhs = pair([&](const MarkedPoint& p) { return p.s * u(p.x); }, w);
        CHECK(lhs == rhs);
    }
}

TEST_CASE("csv dump")
{
    MarkedConfiguration w({{{0.25, 0.5, 0}, 2}, {{0.125, 1, 0}, 0.5}}, 2);
    CHECK(to_csv(w) == "x1,x2,s\n0.125,1,0.5\n0.25,0.5,2\n");
    std::ostringstream os;
    write_csv(os, w);
    CHECK(os.str() == to_csv(w));
}
