// SPDX-License-Identifier: Apache-2.0
#include "mpcs/levy_model.hpp"

#include <algorithm>
#include <numbers>

namespace mpcs
{

namespace
{
constexpr int kMaxRejections = 1000000;

double normal_interval_mass(double lo, double hi, double mean, double var)
{
    double scale = std::sqrt(2 * var);
    return 0.5
           * (std::erfc((lo - mean) / scale) - std::erfc((hi - mean) / scale));
}
}  // namespace

LevyModel::LevyModel(int dim, SpatialSpec spatial, MarkSpec marks)
    : dim_(dim), spatial_(std::move(spatial)), marks_(std::move(marks))
{
    if (dim_ < 1 || dim_ > kMaxDim)
        throw Error(ErrorKind::model, "dimension must be 1, 2 or 3");
    if (!(spatial_.level >= 0))
        throw Error(ErrorKind::model, "spatial level must be >= 0");
    if (spatial_.family == SpatialFamily::gaussian && !(spatial_.variance > 0))
        throw Error(ErrorKind::model, "gaussian variance must be positive");
    if (spatial_.family == SpatialFamily::uniform)
        spatial_.box.dim = dim_;
    if (marks_.profile.is_zero())
        marks_.profile = SpatialField(dim_);
    switch (marks_.family)
    {
        case MarkFamily::exponential:
            if (!(marks_.rate > 0)
                || !(marks_.rate - std::abs(marks_.rate_slope)
                         * marks_.profile.sup()
                     > 0))
                throw Error(ErrorKind::model,
                            "exponential rate must stay positive");
            break;
        case MarkFamily::gamma:
            if (!(marks_.shape > 0) || !(marks_.rate > 0))
                throw Error(ErrorKind::model, "gamma needs shape, rate > 0");
            break;
        case MarkFamily::lognormal:
            if (!(marks_.sigma2 > 0))
                throw Error(ErrorKind::model, "lognormal needs sigma2 > 0");
            break;
    }
}

LevyModel LevyModel::uniform_exponential(const Box& box, double level,
                                         double rate)
{
    SpatialSpec sp;
    sp.family = SpatialFamily::uniform;
    sp.level = level;
    sp.box = box;
    MarkSpec mk;
    mk.family = MarkFamily::exponential;
    mk.rate = rate;
    return LevyModel(box.dim, sp, mk);
}

LevyModel LevyModel::solvable(double level)
{
    SpatialSpec sp;
    sp.family = SpatialFamily::gaussian;
    sp.level = level;
    sp.variance = 1;
    MarkSpec mk;
    mk.family = MarkFamily::lognormal;
    mk.mu = 0;
    mk.sigma2 = 1;
    return LevyModel(1, sp, mk);
}

double LevyModel::rho(const Vec& x) const
{
    switch (spatial_.family)
    {
        case SpatialFamily::uniform:
            return spatial_.box.contains(x) ? spatial_.level : 0.0;
        case SpatialFamily::gaussian: {
            double r2 = 0;
            for (int i = 0; i < dim_; ++i)
                r2 += (x[i] - spatial_.mean[i]) * (x[i] - spatial_.mean[i]);
            double norm = std::pow(2 * std::numbers::pi * spatial_.variance,
                                   -0.5 * dim_);
            return spatial_.level * norm
                   * std::exp(-0.5 * r2 / spatial_.variance);
        }
    }
    return 0;
}

double LevyModel::rate_at(const Vec& x) const
{
    if (marks_.rate_slope == 0)
        return marks_.rate;
    return marks_.rate + marks_.rate_slope * marks_.profile.value(x);
}

double LevyModel::mu_at(const Vec& x) const
{
    if (marks_.mu_slope == 0)
        return marks_.mu;
    return marks_.mu + marks_.mu_slope * marks_.profile.value(x);
}

double LevyModel::mark_density(const MarkedPoint& p) const
{
    double s = p.s;
    if (!(s > 0))
        return 0;
    switch (marks_.family)
    {
        case MarkFamily::exponential: {
            double lam = rate_at(p.x);
            return lam * std::exp(-lam * s);
        }
        case MarkFamily::gamma: {
            double k = marks_.shape;
            double lam = marks_.rate;
            return std::exp(k * std::log(lam) - std::lgamma(k)
                            + (k - 1) * std::log(s) - lam * s);
        }
        case MarkFamily::lognormal: {
            double u = std::log(s);
            double z = u - mu_at(p.x);
            return std::exp(-0.5 * z * z / marks_.sigma2)
                   / (s * std::sqrt(2 * std::numbers::pi * marks_.sigma2));
        }
    }
    return 0;
}

LogDerivatives LevyModel::log_derivatives(const MarkedPoint& p) const
{
    LogDerivatives d;
    if (!(p.s > 0))
        throw Error(ErrorKind::domain, "mark must be positive");
    switch (spatial_.family)
    {
        case SpatialFamily::uniform:
            if (!spatial_.box.contains(p.x) || spatial_.level == 0)
                throw Error(ErrorKind::domain,
                            "log-derivative outside the support of q");
            break;
        case SpatialFamily::gaussian:
            if (spatial_.level == 0)
                throw Error(ErrorKind::domain, "zero intensity");
            for (int i = 0; i < dim_; ++i)
                d.grad_x[i] = -(p.x[i] - spatial_.mean[i]) / spatial_.variance;
            break;
    }
    switch (marks_.family)
    {
        case MarkFamily::exponential: {
            double lam = rate_at(p.x);
            d.s_ds = -lam * p.s;
            if (marks_.rate_slope != 0)
            {
                Vec g = marks_.profile.jet(p.x).grad;
                double c = (1 / lam - p.s) * marks_.rate_slope;
                d.grad_x = d.grad_x + c * g;
            }
            break;
        }
        case MarkFamily::gamma:
            d.s_ds = (marks_.shape - 1) - marks_.rate * p.s;
            break;
        case MarkFamily::lognormal: {
            double z = (std::log(p.s) - mu_at(p.x)) / marks_.sigma2;
            d.s_ds = -1 - z;
            if (marks_.mu_slope != 0)
            {
                Vec g = marks_.profile.jet(p.x).grad;
                d.grad_x = d.grad_x + (z * marks_.mu_slope) * g;
            }
            break;
        }
    }
    return d;
}

double LevyModel::sigma_mass(const Box& window) const
{
    if (window.empty())
        return 0;
    switch (spatial_.family)
    {
        case SpatialFamily::uniform: {
            Box inter = window.intersect(spatial_.box);
            return inter.empty() ? 0.0 : spatial_.level * inter.volume();
        }
        case SpatialFamily::gaussian: {
            double m = spatial_.level;
            for (int i = 0; i < dim_; ++i)
                m *= normal_interval_mass(window.lo[i], window.hi[i],
                                          spatial_.mean[i], spatial_.variance);
            return m;
        }
    }
    return 0;
}

Vec LevyModel::sample_position(const Box& window, Rng& rng) const
{
    Vec x{0, 0, 0};
    switch (spatial_.family)
    {
        case SpatialFamily::uniform: {
            Box inter = window.intersect(spatial_.box);
            if (inter.empty() || spatial_.level == 0)
                throw Error(ErrorKind::sampling, "zero-mass window");
            for (int i = 0; i < dim_; ++i)
                x[i] = inter.lo[i] + (inter.hi[i] - inter.lo[i]) * rng.uniform();
            return x;
        }
        case SpatialFamily::gaussian: {
            if (!(sigma_mass(window) > 0))
                throw Error(ErrorKind::sampling, "zero-mass window");
            double sd = std::sqrt(spatial_.variance);
            for (int attempt = 0; attempt < kMaxRejections; ++attempt)
            {
                for (int i = 0; i < dim_; ++i)
                    x[i] = spatial_.mean[i] + sd * rng.normal();
                if (window.contains(x))
                    return x;
            }
            throw Error(ErrorKind::sampling, "gaussian rejection exhausted");
        }
    }
    return x;
}

double LevyModel::sample_mark(const Vec& x, Rng& rng) const
{
    switch (marks_.family)
    {
        case MarkFamily::exponential: return rng.exponential() / rate_at(x);
        case MarkFamily::gamma: return rng.gamma(marks_.shape) / marks_.rate;
        case MarkFamily::lognormal:
            return std::exp(mu_at(x) + std::sqrt(marks_.sigma2) * rng.normal());
    }
    return 1;
}

MarkedPoint LevyModel::sample_point(const Box& window, Rng& rng) const
{
    MarkedPoint p;
    p.x = sample_position(window, rng);
    p.s = sample_mark(p.x, rng);
    return p;
}

//---------------------------------------------------------------------------//
double beta_point(const LieElement& xi, const LevyModel& model,
                  const MarkedPoint& p)
{
    auto lj = xi.jet(p.x);
    if (lj.div == 0 && lj.a == 0 && lj.v == Vec{0, 0, 0})
        return 0;
    auto ld = model.log_derivatives(p);
    return dot(ld.grad_x, lj.v) + lj.div + ld.s_ds * lj.a + lj.a;
}

double integrate_sigma(const std::function<double(const MarkedPoint&)>& f,
                       const LevyModel& model, const QuadratureRule& rule)
{
    return integrate(
        [&](const MarkedPoint& p) {
            double w = model.q(p);
            return w == 0 ? 0.0 : f(p) * w;
        },
        rule);
}

QuadratureRule rule_for(const TestFunction& phi, int order)
{
    if (!phi.compact())
        throw Error(ErrorKind::quadrature,
                    "test function support is not compact");
    auto spec = spec_for_support(phi.support(), order);
    add_breaks(spec, phi);
    return QuadratureRule(spec);
}

namespace
{
MarkedBox joint_support(const TestFunction& a, const TestFunction& b)
{
    if (!a.compact() && !b.compact())
        throw Error(ErrorKind::quadrature,
                    "neither test function has compact support");
    if (!a.compact())
        return b.support();
    if (!b.compact())
        return a.support();
    auto sa = a.support();
    auto sb = b.support();
    MarkedBox r;
    r.x = sa.x.intersect(sb.x);
    r.s_lo = std::max(sa.s_lo, sb.s_lo);
    r.s_hi = std::min(sa.s_hi, sb.s_hi);
    return r;
}
}  // namespace

double inner_sigma(const TestFunction& phi, const TestFunction& psi,
                   const LevyModel& model, int order)
{
    auto box = joint_support(phi, psi);
    auto spec = spec_for_support(box, order);
    add_breaks(spec, phi);
    add_breaks(spec, psi);
    QuadratureRule rule(spec);
    return integrate_sigma(
        [&](const MarkedPoint& p) { return phi(p) * psi(p); }, model, rule);
}

double mean_sigma(const TestFunction& phi, const LevyModel& model, int order)
{
    return integrate_sigma([&](const MarkedPoint& p) { return phi(p); }, model,
                           rule_for(phi, order));
}

double base_ibp_residual(
    const LieElement& xi, const TestFunction& phi1, const TestFunction& phi2,
    const LevyModel& model, int order,
    const std::function<double(const MarkedPoint&)>& density)
{
    auto box = joint_support(phi1, phi2);
    if (box.x.empty() || !(box.s_hi > box.s_lo))
        return 0;
    auto spec = spec_for_support(box, order);
    add_breaks(spec, phi1);
    add_breaks(spec, phi2);
    add_breaks(spec, xi);
    QuadratureRule rule(spec);
    return integrate(
        [&](const MarkedPoint& p) {
            double w = density ? density(p) : model.q(p);
            if (w == 0)
                return 0.0;
            auto j1 = phi1.jet(p);
            auto j2 = phi2.jet(p);
            auto lj = xi.jet(p.x);
            double d1 = dot(j1.grad, lj.v) + p.s * j1.ds * lj.a;
            double d2 = dot(j2.grad, lj.v) + p.s * j2.ds * lj.a;
            double beta = beta_point(xi, model, p);
            return (d1 * j2.value + j1.value * d2 + j1.value * j2.value * beta)
                   * w;
        },
        rule);
}

}  // namespace mpcs
