// SPDX-License-Identifier: Apache-2.0
//! \file montecarlo.hpp
//! Counter-based random streams and deterministic parallel estimators.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mpcs/errors.hpp"
#include "mpcs/quadrature.hpp"

namespace mpcs
{

//! Philox4x32-10 block function
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

struct RngSpec
{
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

//! Stream id derived from a name and an index; stable across platforms.
std::uint64_t stream_id(std::string_view name, std::uint64_t index = 0);

/*!
 * Random stream addressed by (seed, stream, sample index).
 *
 * The seed is the Philox key; stream and sample index fill the upper three
 * counter words, and the lowest word counts blocks. Any two distinct
 * addresses therefore read disjoint parts of the Philox sequence.
 */
class Rng
{
  public:
    Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);
    Rng(const RngSpec& spec, std::uint64_t index)
        : Rng(spec.seed, spec.stream, index)
    {
    }

    std::uint32_t next_u32();
    //! Uniform on the open interval (0, 1) with 53 random bits
    double uniform();
    double normal();
    double exponential();
    double gamma(double shape);
    std::uint64_t poisson(double mean);

  private:
    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    std::optional<double> spare_normal_;
};

//---------------------------------------------------------------------------//
struct McEstimate
{
    double mean = 0;
    double std_error = 0;
    std::size_t n = 0;
    std::size_t skipped = 0;
    std::optional<double> target;
    std::optional<double> z;
    bool pass = true;
};

//! Attach a target and z-score verdict; zero spread passes only on equality
McEstimate with_target(McEstimate est, double target, double z_max = 4);

//! Mean and standard error (sample stddev / sqrt n) with pairwise sums
McEstimate summarize(std::span<const double> values, std::size_t skipped = 0);

//! Per-sample results: n rows of k values plus a validity flag per row.
struct SampleTable
{
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> values;
    std::vector<char> ok;

    std::span<const double> row(std::size_t i) const
    {
        return {values.data() + i * k, k};
    }
    std::size_t skipped() const;
    //! Column j over valid rows
    std::vector<double> column(std::size_t j) const;
    std::vector<McEstimate> estimates() const;
};

inline constexpr double kMaxSkippedFraction = 0.01;

/*!
 * Evaluate fn(rng, out) for sample indices 0..n-1 across workers.
 *
 * Each index owns its stream, so results do not depend on the worker count.
 * Samples that raise mpcs::Error or produce non-finite values are skipped;
 * more than 1% skipped is an experiment error.
 */
template<class Fn>
SampleTable run_samples(std::size_t n, std::size_t k, const RngSpec& spec,
                        int workers, Fn&& fn)
{
    SampleTable table;
    table.n = n;
    table.k = k;
    table.values.assign(n * k, 0.0);
    table.ok.assign(n, 1);
    workers = std::max(1, workers);

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        try
        {
            for (std::size_t i = begin; i < end; ++i)
            {
                std::span<double> out(table.values.data() + i * k, k);
                Rng rng(spec, i);
                try
                {
                    fn(rng, out);
                    for (double v : out)
                    {
                        if (!std::isfinite(v))
                        {
                            table.ok[i] = 0;
                            break;
                        }
                    }
                }
                catch (const Error&)
                {
                    table.ok[i] = 0;
                }
            }
        }
        catch (...)
        {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
        }
    };

    if (workers == 1 || n < 2)
    {
        work(0, n);
    }
    else
    {
        std::vector<std::thread> pool;
        std::size_t chunk = (n + workers - 1) / workers;
        for (int w = 0; w < workers; ++w)
        {
            std::size_t begin = std::min(n, w * chunk);
            std::size_t end = std::min(n, begin + chunk);
            pool.emplace_back(work, begin, end);
        }
        for (auto& t : pool)
            t.join();
    }
    if (failure)
        std::rethrow_exception(failure);
    if (table.skipped() > kMaxSkippedFraction * static_cast<double>(n))
        throw Error(ErrorKind::experiment,
                    std::to_string(table.skipped()) + " of "
                        + std::to_string(n) + " samples failed");
    return table;
}

//! Mean of functional(sampler(rng)) over n independent samples
template<class Sampler, class Functional>
McEstimate estimate(Sampler&& sampler, Functional&& functional, std::size_t n,
                    const RngSpec& spec, int workers)
{
    if (n < 2)
        throw Error(ErrorKind::experiment, "estimate needs n >= 2");
    auto table = run_samples(n, 1, spec, workers,
                             [&](Rng& rng, std::span<double> out) {
                                 auto sample = sampler(rng);
                                 out[0] = functional(sample);
                             });
    return table.estimates().front();
}

//! Common-random-numbers estimate of E[f - g]
template<class Sampler, class F, class G>
McEstimate paired_estimate(Sampler&& sampler, F&& f, G&& g, std::size_t n,
                           const RngSpec& spec, int workers)
{
    if (n < 2)
        throw Error(ErrorKind::experiment, "estimate needs n >= 2");
    auto table = run_samples(n, 1, spec, workers,
                             [&](Rng& rng, std::span<double> out) {
                                 auto sample = sampler(rng);
                                 out[0] = f(sample) - g(sample);
                             });
    return table.estimates().front();
}

//! Difference of two estimates treated as independent
McEstimate difference(const McEstimate& a, const McEstimate& b);

}  // namespace mpcs
