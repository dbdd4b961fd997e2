// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "mpcs/experiments.hpp"

using namespace mpcs;
using nlohmann::json;

namespace
{

bool config_rejects(const json& j)
{
    try
    {
        parse_config(j);
    }
    catch (const Error& e)
    {
        return e.kind() == ErrorKind::config;
    }
    return false;
}

}  // namespace

TEST_CASE("registry covers every identity")
{
    std::set<std::string> names;
    for (auto const& e : registry())
    {
        CHECK(!e.anchor.empty());
        CHECK(find_experiment(e.name) == &e);
        names.insert(e.name);
    }
    CHECK(names.size() == registry().size());
    for (auto const* n : {"laplace", "quasiinv", "image_measure", "compound", "base_ibp", "ibp", "ibp_mixed",
                          "divergence", "dirichlet", "lie", "unitary", "chaos_orth", "annihilation", "number_op",
                          "second_quant", "semigroup", "exp_functional", "ergodicity", "kernel"})
        CHECK_MESSAGE(names.contains(n), n);
    CHECK(find_experiment("nope") == nullptr);
    CHECK_THROWS_AS(run_experiment("nope", parse_config(json::object())), Error);
}

TEST_CASE("config validation")
{
    auto c = parse_config(json::object());
    CHECK(c.samples == 100000);
    CHECK(c.inner_samples == 10000);
    CHECK(c.z_max == 4);
    CHECK(c.workers == 1);

    CHECK(config_rejects({{"sample", 10}}));
    CHECK(config_rejects({{"samples", 1}}));
    CHECK(config_rejects({{"workers", 0}}));
    CHECK(config_rejects({{"flow", {{"step", 0.1}, {"stride", 1}}}}));
    CHECK(config_rejects({{"experiments", {"laplace", "nope"}}}));
    CHECK(config_rejects({{"overrides", {{"nope", {{"samples", 10}}}}}}));
    CHECK(config_rejects({{"overrides", {{"laplace", {{"samples", 1}}}}}}));
    CHECK(config_rejects({{"measure", {{"kind", "mixed"}}}}));
    CHECK(config_rejects({{"measure", {{"kind", "binomial"}}}}));
    // fixtures must sit inside the window
    json far = {{"terms", {{{"amp", 0.3}, {"x", {{{"kind", "bump"}, {"center", 3}, {"radius", 0.2}}}}}}}};
    CHECK(config_rejects({{"fixture_set", {{"test_functions", {far}}}}}));
    json near = {{"terms",
                  {{{"amp", 0.3},
                    {"x", {{{"kind", "bump"}, {"center", 0.5}, {"radius", 0.2}}}},
                    {"s", {{"kind", "bump"}, {"center", 1}, {"radius", 0.5}}}}}}};
    CHECK(parse_config({{"fixture_set", {{"test_functions", {near}}}}}).test_functions.size() == 1);

    auto o = parse_config({{"overrides", {{"ibp", {{"samples", 50}, {"tolerance_scale", 2}}}}}});
    CHECK(o.samples_for("ibp", 7) == 50);
    CHECK(o.samples_for("laplace", 7) == 7);
    CHECK(o.tolerance_scale_for("ibp") == 2);
    CHECK(o.tolerance_scale_for("laplace") == 1);

    // the hash ignores key order
    CHECK(config_hash(json::parse(R"({"a":1,"b":2})")) == config_hash(json::parse(R"({"b":2,"a":1})")));
    CHECK(config_hash(json{{"a", 1}}) != config_hash(json{{"a", 2}}));
}

TEST_CASE("empty experiment list gives an empty passing report")
{
    auto rep = run_suite(parse_config({{"experiments", json::array()}}));
    CHECK(rep.experiments.empty());
    CHECK(rep.verdict);
    auto j = to_json(rep);
    CHECK(j.at("verdict") == "pass");
    CHECK(j.at("experiments").empty());
    for (auto const* k : {"suite_version", "config_hash", "seed"})
        CHECK(j.contains(k));
}

TEST_CASE("ibp with the zero Lie element has zero residual")
{
    auto c = parse_config(
        {{"samples", 2000}, {"fixtures", 1}, {"fixture_set", {{"lie_elements", {json::object()}}}}});
    auto rep = run_experiment("ibp", c);
    CHECK(rep.verdict);
    REQUIRE(!rep.estimates.empty());
    for (auto const& e : rep.estimates)
    {
        CHECK(e.est.mean == 0.0);
        CHECK(e.est.std_error == 0.0);
    }
}

TEST_CASE("kernel: the empty stratum is exact")
{
    auto c = parse_config({{"samples", 4000}, {"inner_samples", 200}});
    auto rep = kernel_check(c);
    bool seen = false;
    for (auto const& r : rep.residuals)
    {
        if (r.label.find("stratum 0") != std::string::npos)
        {
            seen = true;
            CHECK(r.value == 0.0);
        }
    }
    CHECK(seen);
}

TEST_CASE("suite verdict is the conjunction")
{
    ExperimentReport a;
    a.add_residual("ok", 0.5, 1);
    a.add_lower_bound("floor", 2, 1);
    a.finalize();
    CHECK(a.verdict);
    ExperimentReport b;
    b.add_residual("bad", 2, 1);
    b.finalize();
    CHECK(!b.verdict);
    ExperimentReport d;
    d.add("off", with_target(McEstimate{1.0, 0.1, 100}, 0.0));
    d.finalize();
    CHECK(!d.verdict);

    SuiteReport s;
    s.experiments = {a, b};
    s.verdict = false;
    auto csv = to_csv(s);
    CHECK(csv.find("bad") != std::string::npos);
    CHECK(csv.find("floor") != std::string::npos);
}
