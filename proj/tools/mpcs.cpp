// SPDX-License-Identifier: Apache-2.0
// mpcs: run identity checks and sample marked configurations.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mpcs/experiments.hpp"

namespace
{

int write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
    {
        std::cerr << "mpcs: cannot write '" << path << "'\n";
        return 2;
    }
    out << text;
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& experiment,
            std::optional<std::uint64_t> seed, std::optional<int> workers,
            const std::string& out_path, const std::string& csv_dir)
{
    auto config = mpcs::load_config(config_path);
    if (seed)
        config.seed = *seed;
    if (workers)
    {
        if (*workers < 1)
            throw mpcs::Error(mpcs::ErrorKind::config, "--workers must be >= 1");
        config.workers = *workers;
    }
    mpcs::SuiteReport suite;
    if (!experiment.empty())
    {
        suite.config_hash = mpcs::config_hash(config.raw);
        suite.seed = config.seed;
        suite.experiments.push_back(mpcs::run_experiment(experiment, config));
        suite.verdict = suite.experiments.back().verdict;
    }
    else
    {
        suite = mpcs::run_suite(config);
    }
    auto text = mpcs::to_json(suite).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else if (int rc = write_file(out_path, text))
        return rc;
    if (!csv_dir.empty())
    {
        std::filesystem::create_directories(csv_dir);
        if (int rc = write_file(
                (std::filesystem::path(csv_dir) / "report.csv").string(),
                mpcs::to_csv(suite)))
            return rc;
    }
    for (auto const& e : suite.experiments)
        std::cerr << (e.verdict ? "pass " : "FAIL ") << e.name << "\n";
    return suite.verdict ? 0 : 1;
}

int cmd_sample(const std::string& config_path, std::size_t n,
               const std::string& out_path)
{
    auto config = mpcs::load_config(config_path);
    mpcs::ConfigurationSampler sampler{config.model, config.window,
                                       config.measure};
    std::ostringstream os;
    int dim = config.model.dim();
    os << "sample";
    for (int i = 1; i <= dim; ++i)
        os << ",x" << i;
    os << ",s\n";
    os.precision(17);
    for (std::size_t k = 0; k < n; ++k)
    {
        mpcs::Rng rng(config.seed, mpcs::stream_id("sample"), k);
        for (auto const& p : sampler(rng))
        {
            os << k;
            for (int i = 0; i < dim; ++i)
                os << ',' << p.x[i];
            os << ',' << p.s << '\n';
        }
    }
    if (out_path.empty())
    {
        std::cout << os.str();
        return 0;
    }
    return write_file(out_path, os.str());
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Marked Poisson configuration spaces: sampling and identity "
                 "checks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string experiment;
    std::string out_path;
    std::string csv_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    auto* run = app.add_subcommand("run", "Run experiments and write a report");
    run->add_option("--config", config_path, "JSON config")
        ->required()
        ->check(CLI::ExistingFile);
    run->add_option("--experiment", experiment, "Run only this experiment");
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--workers", workers, "Worker threads");
    run->add_option("--out", out_path, "Report JSON path (default stdout)");
    run->add_option("--csv", csv_dir, "Directory for report.csv");

    std::size_t n = 1;
    std::string sample_config;
    std::string sample_out;
    auto* sample = app.add_subcommand("sample", "Draw configurations as CSV");
    sample->add_option("--config", sample_config, "JSON config")
        ->required()
        ->check(CLI::ExistingFile);
    sample->add_option("--n", n, "Number of configurations")->required();
    sample->add_option("--out", sample_out, "CSV path (default stdout)");

    auto* list = app.add_subcommand("list", "List experiments");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        if (*list)
        {
            for (auto const& e : mpcs::registry())
                std::cout << e.name << "\t" << e.anchor << "\n";
            return 0;
        }
        if (*sample)
            return cmd_sample(sample_config, n, sample_out);
        return cmd_run(config_path, experiment, seed, workers, out_path,
                       csv_dir);
    }
    catch (const mpcs::Error& e)
    {
        std::cerr << "mpcs: " << e.what() << "\n";
        return e.kind() == mpcs::ErrorKind::config ? 2 : 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "mpcs: " << e.what() << "\n";
        return 1;
    }
}
