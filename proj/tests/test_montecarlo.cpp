// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "mpcs/montecarlo.hpp"
#include "support.hpp"

using namespace mpcs;

TEST_CASE("Philox4x32-10 known answers")
{
    using W = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams")
{
    CHECK(stream_id("a") == stream_id("a"));
    CHECK(stream_id("a") != stream_id("b"));
    CHECK(stream_id("a", 0) != stream_id("a", 1));

    // the same address replays; different addresses differ
    Rng a(1, 2, 3), b(1, 2, 3), c(1, 2, 4), d(1, 3, 3), e(2, 2, 3);
    std::set<std::uint32_t> firsts;
    for (auto* r : {&c, &d, &e})
        firsts.insert(r->next_u32());
    std::uint32_t x = a.next_u32();
    CHECK(x == b.next_u32());
    CHECK(!firsts.contains(x));

    // neighbouring streams are uncorrelated
    std::vector<double> prod;
    for (std::uint64_t i = 0; i < 100000; ++i)
    {
        Rng u(5, 10, i), v(5, 11, i);
        prod.push_back((u.uniform() - 0.5) * (v.uniform() - 0.5));
    }
    CHECK(with_target(summarize(prod), 0.0).pass);
}

TEST_CASE("variates")
{
    Rng r(6, 1);
    std::size_t n = 100000;
    std::vector<double> u, z, z2, ex, g, po, po_var;
    bool open = true;
    for (std::size_t i = 0; i < n; ++i)
    {
        double x = r.uniform();
        open = open && x > 0 && x < 1;
        u.push_back(x);
        double y = r.normal();
        z.push_back(y);
        z2.push_back(y * y);
        ex.push_back(r.exponential());
        g.push_back(r.gamma(0.6));
        double k = static_cast<double>(r.poisson(3.5));
        po.push_back(k);
        po_var.push_back((k - 3.5) * (k - 3.5));
    }
    CHECK(open);
    CHECK(with_target(summarize(u), 0.5).pass);
    CHECK(with_target(summarize(z), 0.0).pass);
    CHECK(with_target(summarize(z2), 1.0).pass);
    CHECK(with_target(summarize(ex), 1.0).pass);
    CHECK(with_target(summarize(g), 0.6).pass);
    CHECK(with_target(summarize(po), 3.5).pass);
    CHECK(with_target(summarize(po_var), 3.5).pass);

    // large means take a different path
    std::vector<double> big;
    for (std::size_t i = 0; i < 20000; ++i)
        big.push_back(static_cast<double>(r.poisson(250)));
    CHECK(with_target(summarize(big), 250).pass);
    CHECK(r.poisson(0) == 0);
}

TEST_CASE("summaries and verdicts")
{
    std::vector<double> v{1, 2, 3, 4};
    auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3 / 4)).epsilon(1e-15));
    CHECK(s.n == 4);

    auto flat = summarize(std::vector<double>(10, 0.25));
    CHECK(flat.std_error == 0.0);
    CHECK(with_target(flat, 0.25).pass);
    CHECK(!with_target(flat, 0.26).pass);
    auto w = with_target(s, 2.5 + 5 * s.std_error);
    CHECK(!w.pass);
    CHECK(*w.z == doctest::Approx(-5).epsilon(1e-12));

    McEstimate a{1.0, 0.3}, b{0.5, 0.4};
    auto d = difference(a, b);
    CHECK(d.mean == 0.5);
    CHECK(d.std_error == doctest::Approx(0.5).epsilon(1e-15));

    // pairwise sums of many small terms
    std::vector<double> tiny(1 << 20, 0.1);
    CHECK(std::abs(pairwise_sum(tiny) - 0.1 * (1 << 20)) <= 1e-8);
}

TEST_CASE("run_samples is independent of the worker count")
{
    auto fn = [](Rng& r, std::span<double> out) {
        out[0] = r.normal();
        out[1] = r.uniform();
    };
    auto one = run_samples(1001, 2, RngSpec{7, 1}, 1, fn);
    auto four = run_samples(1001, 2, RngSpec{7, 1}, 4, fn);
    auto seven = run_samples(1001, 2, RngSpec{7, 1}, 7, fn);
    CHECK(one.values == four.values);
    CHECK(one.values == seven.values);
    auto e1 = one.estimates();
    auto e4 = four.estimates();
    CHECK(e1[0].mean == e4[0].mean);
    CHECK(e1[0].std_error == e4[0].std_error);
}

TEST_CASE("run_samples skips failed samples up to one percent")
{
    auto some = [](Rng& r, std::span<double> out) {
        if (r.uniform() < 0.005)
            throw Error(ErrorKind::domain, "x");
        out[0] = 1;
    };
    auto t = run_samples(10000, 1, RngSpec{8, 1}, 2, some);
    CHECK(t.skipped() > 0);
    CHECK(t.column(0).size() == 10000 - t.skipped());
    auto many = [](Rng& r, std::span<double> out) {
        out[0] = r.uniform() < 0.05 ? std::nan("") : 1.0;
    };
    CHECK_THROWS_AS(run_samples(10000, 1, RngSpec{8, 2}, 1, many), Error);
    auto bug = [](Rng&, std::span<double>) { throw std::logic_error("bug"); };
    CHECK_THROWS_AS(run_samples(10, 1, RngSpec{8, 3}, 3, bug), std::logic_error);
}

TEST_CASE("estimators")
{
    auto m = testing::unit_model();
    Box w = Box::cube(1, 0, 1);
    auto sampler = [&](Rng& r) { return sample_poisson(m, w, r); };
    auto c = estimate(sampler, [](const MarkedConfiguration&) { return 3.0; }, 1000, RngSpec{9, 1}, 2);
    CHECK(c.mean == 3.0);
    CHECK(c.std_error == 0.0);
    auto empty = estimate(sampler, [](const MarkedConfiguration& o) { return o.empty() ? 1.0 : 0.0; }, 100000,
                          RngSpec{9, 2}, 2);
    CHECK(with_target(empty, std::exp(-1.0)).pass);
    auto same = paired_estimate(
        sampler, [](const MarkedConfiguration& o) { return double(o.size()); },
        [](const MarkedConfiguration& o) { return double(o.size()); }, 1000, RngSpec{9, 3}, 1);
    CHECK(same.mean == 0.0);
    CHECK(same.std_error == 0.0);
    CHECK_THROWS_AS(estimate(sampler, [](const MarkedConfiguration&) { return 1.0; }, 1, RngSpec{9, 4}, 1), Error);

    // pairing removes the shared fluctuation
    auto f = [](const MarkedConfiguration& o) { return double(o.size()); };
    auto g = [](const MarkedConfiguration& o) { return double(o.size()) + (o.empty() ? 0.0 : o[0].s * 0.1); };
    auto paired = paired_estimate(sampler, f, g, 20000, RngSpec{9, 5}, 1);
    auto unpaired = difference(estimate(sampler, f, 20000, RngSpec{9, 6}, 1),
                               estimate(sampler, g, 20000, RngSpec{9, 7}, 1));
    CHECK(paired.std_error <= unpaired.std_error);
}
