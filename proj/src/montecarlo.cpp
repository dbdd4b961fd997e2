// SPDX-License-Identifier: Apache-2.0
#include "mpcs/montecarlo.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

namespace mpcs
{

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round)
    {
        std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto lo0 = static_cast<std::uint32_t>(p0);
        auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

std::uint64_t stream_id(std::string_view name, std::uint64_t index)
{
    // FNV-1a over the name, then mixed with the index (splitmix finalizer)
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : name)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::uint64_t z = h + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z & 0xffffffffull;
}

//---------------------------------------------------------------------------//
Rng::Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)}
    , ctr_{0, static_cast<std::uint32_t>(index),
           static_cast<std::uint32_t>(index >> 32),
           static_cast<std::uint32_t>(stream)}
{
    if (stream >> 32)
        throw Error(ErrorKind::sampling, "stream index must fit in 32 bits");
}

std::uint32_t Rng::next_u32()
{
    if (pos_ == 4)
    {
        buf_ = philox4x32(ctr_, key_);
        ++ctr_[0];
        if (ctr_[0] == 0)
            throw Error(ErrorKind::sampling, "random stream exhausted");
        pos_ = 0;
    }
    return buf_[pos_++];
}

double Rng::uniform()
{
    std::uint64_t a = next_u32() >> 5;
    std::uint64_t b = next_u32() >> 6;
    return (static_cast<double>((a << 26) | b) + 0.5) * 0x1.0p-53;
}

double Rng::normal()
{
    if (spare_normal_)
    {
        double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    double r = std::sqrt(-2 * std::log(uniform()));
    double phase = 2 * std::numbers::pi * uniform();
    spare_normal_ = r * std::sin(phase);
    return r * std::cos(phase);
}

double Rng::exponential() { return -std::log(uniform()); }

double Rng::gamma(double shape)
{
    if (!(shape > 0))
        throw Error(ErrorKind::sampling, "gamma shape must be positive");
    if (shape < 1)
    {
        double g = gamma(shape + 1);
        return g * std::pow(uniform(), 1 / shape);
    }
    // Marsaglia-Tsang
    double d = shape - 1.0 / 3;
    double c = 1 / std::sqrt(9 * d);
    for (;;)
    {
        double x = normal();
        double v = 1 + c * x;
        if (v <= 0)
            continue;
        v = v * v * v;
        double u = uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v))
            return d * v;
    }
}

std::uint64_t Rng::poisson(double mean)
{
    if (!(mean >= 0) || !std::isfinite(mean))
        throw Error(ErrorKind::sampling, "Poisson mean must be finite >= 0");
    if (mean == 0)
        return 0;
    // Inversion on pieces of mean <= 30 keeps exp(-mean) well scaled
    constexpr double piece = 30;
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0)
    {
        double m = std::min(remaining, piece);
        remaining -= m;
        double u = uniform();
        double p = std::exp(-m);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000)
        {
            ++k;
            p *= m / static_cast<double>(k);
            cdf += p;
        }
        total += k;
    }
    return total;
}

//---------------------------------------------------------------------------//
McEstimate with_target(McEstimate est, double target, double z_max)
{
    est.target = target;
    double diff = est.mean - target;
    // Identities that hold sample by sample leave only rounding in the mean
    double se = std::max(est.std_error,
                         64 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(est.mean), std::abs(target)));
    if (se > 0)
        est.z = diff / se;
    else
        est.z = (diff == 0) ? 0.0 : (diff > 0 ? kInf : -kInf);
    est.pass = std::abs(*est.z) <= z_max;
    return est;
}

McEstimate summarize(std::span<const double> values, std::size_t skipped)
{
    McEstimate est;
    est.n = values.size();
    est.skipped = skipped;
    if (values.empty())
        return est;
    est.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() > 1)
    {
        std::vector<double> sq(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
        {
            double d = values[i] - est.mean;
            sq[i] = d * d;
        }
        double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
        est.std_error = std::sqrt(var / static_cast<double>(values.size()));
    }
    return est;
}

std::size_t SampleTable::skipped() const
{
    std::size_t s = 0;
    for (char c : ok)
        s += (c == 0);
    return s;
}

std::vector<double> SampleTable::column(std::size_t j) const
{
    std::vector<double> col;
    col.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (ok[i])
            col.push_back(values[i * k + j]);
    }
    return col;
}

std::vector<McEstimate> SampleTable::estimates() const
{
    std::vector<McEstimate> out;
    std::size_t skip = skipped();
    for (std::size_t j = 0; j < k; ++j)
    {
        auto col = column(j);
        out.push_back(summarize(col, skip));
    }
    return out;
}

McEstimate difference(const McEstimate& a, const McEstimate& b)
{
    McEstimate d;
    d.mean = a.mean - b.mean;
    d.std_error = std::hypot(a.std_error, b.std_error);
    d.n = std::min(a.n, b.n);
    d.skipped = a.skipped + b.skipped;
    return d;
}

}  // namespace mpcs
