// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one pass/fail line per criterion at default sample sizes.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mpcs/experiments.hpp"

using namespace mpcs;

namespace
{

struct Criterion
{
    int id;
    std::string title;
    std::vector<std::string> experiments;
};

const std::vector<Criterion> kCriteria{
    {1, "Laplace functional", {"laplace"}},
    {2, "quasiinvariance", {"quasiinv"}},
    {3, "base integration by parts", {"base_ibp"}},
    {4, "integration by parts, Poisson and mixed", {"ibp", "ibp_mixed"}},
    {5, "Dirichlet duality", {"dirichlet"}},
    {6, "derivative and bracket oracles", {"derivative", "lie"}},
    {7, "Charlier chaos", {"chaos_orth", "annihilation"}},
    {8, "second quantization", {"number_op", "second_quant"}},
    {9, "semigroup", {"semigroup", "exp_functional"}},
    {10, "ergodicity probe", {"ergodicity"}},
    {11, "conditional kernel", {"kernel"}},
};

// experiments rerun with 4 workers for the determinism line
const std::vector<std::string> kRepeat{"laplace", "ibp", "ibp_mixed",
                                       "chaos_orth", "kernel"};

struct Summary
{
    bool pass = true;
    double max_z = 0;
    std::size_t estimates = 0;
    //! worst value / tolerance over residuals with a positive tolerance
    double worst_ratio = 0;
    std::size_t residuals = 0;
    //! smallest value / bound over lower-bound checks
    double min_margin = INFINITY;
    std::vector<std::string> failed;

    void add(const ExperimentReport& r)
    {
        pass = pass && r.verdict;
        for (auto const& e : r.estimates)
        {
            ++estimates;
            if (e.est.z)
                max_z = std::max(max_z, std::abs(*e.est.z));
            if (!e.est.pass)
                failed.push_back(r.name + ": " + e.label);
        }
        for (auto const& e : r.residuals)
        {
            ++residuals;
            if (e.tolerance > 0 && !e.lower_bound)
                worst_ratio = std::max(worst_ratio, e.value / e.tolerance);
            if (e.lower_bound)
                min_margin = std::min(min_margin, e.value / e.tolerance);
            if (!e.pass)
                failed.push_back(r.name + ": " + e.label);
        }
    }
};

}  // namespace

int main(int argc, char** argv)
{
    ExperimentConfig config;
    try
    {
        config = argc > 1 ? load_config(argv[1])
                          : parse_config(nlohmann::json::object());
    }
    catch (const Error& e)
    {
        std::cerr << "acceptance: " << e.what() << "\n";
        return 2;
    }
    config.workers = 1;

    std::map<std::string, ExperimentReport> reports;
    bool all = true;
    for (auto const& c : kCriteria)
    {
        Summary s;
        auto t0 = std::chrono::steady_clock::now();
        double first_seconds = 0;
        for (auto const& name : c.experiments)
        {
            auto t = std::chrono::steady_clock::now();
            auto r = run_experiment(name, config);
            if (name == c.experiments.front())
                first_seconds = std::chrono::duration<double>(
                                    std::chrono::steady_clock::now() - t)
                                    .count();
            s.add(r);
            reports[name] = std::move(r);
        }
        double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        std::string extra;
        if (std::isfinite(s.min_margin))
        {
            char buf[64];
            std::snprintf(buf, sizeof buf, ", lower bounds value/bound >= %.3g",
                          s.min_margin);
            extra = buf;
        }
        if (c.id == 1)
        {
            bool fast = first_seconds < 10;
            s.pass = s.pass && fast;
            char buf[64];
            std::snprintf(buf, sizeof buf, ", runtime %.2f s (limit 10 s)",
                          first_seconds);
            extra += buf;
            if (!fast)
                s.failed.push_back("runtime");
        }
        char line[256];
        std::snprintf(line, sizeof line,
                      "criterion %2d %s  %s: %zu estimates max|z| %.2f (<= %g), "
                      "%zu residuals worst value/tol %.3g%s [%.1f s]",
                      c.id, s.pass ? "PASS" : "FAIL", c.title.c_str(),
                      s.estimates, s.max_z, config.z_max, s.residuals,
                      s.worst_ratio, extra.c_str(), seconds);
        std::cout << line << "\n";
        for (auto const& f : s.failed)
            std::cout << "    failed: " << f << "\n";
        std::cout.flush();
        all = all && s.pass;
    }

    // criterion 12: byte-identical reports with 4 workers
    auto four = config;
    four.workers = 4;
    std::vector<std::string> differ;
    for (auto const& name : kRepeat)
    {
        auto again = run_experiment(name, four);
        if (to_json(again).dump(2) != to_json(reports.at(name)).dump(2))
            differ.push_back(name);
    }
    bool det = differ.empty();
    std::cout << "criterion 12 " << (det ? "PASS" : "FAIL")
              << "  determinism: " << kRepeat.size()
              << " experiments give identical JSON with workers 1 and 4\n";
    for (auto const& d : differ)
        std::cout << "    differs: " << d << "\n";
    all = all && det;

    std::cout << (all ? "acceptance PASS" : "acceptance FAIL") << "\n";
    return all ? 0 : 1;
}
