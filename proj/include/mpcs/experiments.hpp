// SPDX-License-Identifier: Apache-2.0
//! \file experiments.hpp
//! Named identity checks, their configuration and reports.
#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcs/calculus.hpp"
#include "mpcs/configuration.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/montecarlo.hpp"

namespace mpcs
{

inline constexpr const char* kSuiteVersion = "1.0.0";

struct ExperimentOverride
{
    std::optional<std::size_t> samples;
    std::optional<double> z_max;
    //! Multiplies every pointwise tolerance of the experiment
    std::optional<double> tolerance_scale;
};

struct ExperimentConfig
{
    nlohmann::json raw = nlohmann::json::object();

    std::uint64_t seed = 20240611;
    int workers = 1;
    std::size_t samples = 100000;
    std::size_t inner_samples = 10000;
    double z_max = 4;
    std::uint64_t fixture_seed = 7;
    int fixtures = 5;
    FlowOptions flow{1e-2, 10};

    LevyModel model = LevyModel::uniform_exponential(Box::cube(1, 0, 1), 2, 1);
    Box window = Box::cube(1, 0, 1);
    //! Expectation measure for integration by parts and duality checks
    std::optional<MixingLaw> measure;
    //! Mixture used where a non-degenerate nu is required
    MixingLaw mixture = MixingLaw({{1, 0.5}, {2, 0.5}});

    std::vector<TestFunction> test_functions;
    std::vector<LieElement> lie_elements;

    //! Empty means every registered experiment
    std::vector<std::string> experiments;
    std::map<std::string, ExperimentOverride> overrides;

    std::size_t samples_for(const std::string& name,
                            std::size_t fallback) const;
    double z_max_for(const std::string& name) const;
    double tolerance_scale_for(const std::string& name) const;
};

//! Parse and validate; unknown keys raise a config error
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
//! Stable hex digest of the canonical JSON dump
std::string config_hash(const nlohmann::json& j);

// JSON fixture descriptions
Factor factor_from_json(const nlohmann::json& j);
TestFunction test_function_from_json(const nlohmann::json& j, int dim);
LieElement lie_element_from_json(const nlohmann::json& j, int dim);
LevyModel model_from_json(const nlohmann::json& j);

//---------------------------------------------------------------------------//
struct EstimateEntry
{
    std::string label;
    McEstimate est;
};

struct ResidualEntry
{
    std::string label;
    double value = 0;
    double tolerance = 0;
    //! value <= tolerance, or value >= tolerance for lower-bound checks
    bool lower_bound = false;
    bool pass = true;
};

struct ExperimentReport
{
    std::string name;
    std::string anchor;
    std::vector<EstimateEntry> estimates;
    std::vector<ResidualEntry> residuals;
    std::vector<std::string> notes;
    bool verdict = true;

    void add(std::string label, const McEstimate& est);
    //! Pass iff value <= tolerance
    void add_residual(std::string label, double value, double tolerance);
    //! Pass iff value >= bound
    void add_lower_bound(std::string label, double value, double bound);
    void finalize();
};

struct SuiteReport
{
    std::string suite_version = kSuiteVersion;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<ExperimentReport> experiments;
    bool verdict = true;
};

struct ExperimentInfo
{
    std::string name;
    std::string anchor;
    std::function<ExperimentReport(const ExperimentConfig&)> run;
};

//! Every experiment in suite order
const std::vector<ExperimentInfo>& registry();
const ExperimentInfo* find_experiment(const std::string& name);

//! Throws a config error for unknown names
ExperimentReport run_experiment(const std::string& name,
                                const ExperimentConfig& config);
//! Stratified conditional-kernel identity under the mixture
ExperimentReport kernel_check(const ExperimentConfig& config);
SuiteReport run_suite(const ExperimentConfig& config);

nlohmann::json to_json(const SuiteReport& report);
nlohmann::json to_json(const ExperimentReport& report);
//! One row per estimate or residual
std::string to_csv(const SuiteReport& report);

}  // namespace mpcs
