// SPDX-License-Identifier: Apache-2.0
#include "mpcs/configuration.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace mpcs
{

namespace
{
constexpr int kMaxResample = 1000;

// Points must already be sorted; sweeps along the first coordinate.
bool has_coincidence(const std::vector<MarkedPoint>& pts)
{
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        for (std::size_t j = i + 1; j < pts.size(); ++j)
        {
            if (pts[j].x[0] - pts[i].x[0] > kCoincideEps)
                break;
            if (coincide(pts[i].x, pts[j].x))
                return true;
        }
    }
    return false;
}
}  // namespace

bool point_less(const MarkedPoint& a, const MarkedPoint& b)
{
    if (a.x != b.x)
        return a.x < b.x;
    return a.s < b.s;
}

bool coincide(const Vec& a, const Vec& b) { return norm(a - b) <= kCoincideEps; }

MarkedConfiguration::MarkedConfiguration(std::vector<MarkedPoint> points,
                                         int dim)
    : dim_(dim), points_(std::move(points))
{
    for (auto const& p : points_)
    {
        if (!(p.s > 0) || !std::isfinite(p.s))
            throw Error(ErrorKind::domain, "marks must be finite and positive");
        for (int i = 0; i < kMaxDim; ++i)
        {
            if (!std::isfinite(p.x[i]))
                throw Error(ErrorKind::domain, "positions must be finite");
        }
    }
    std::sort(points_.begin(), points_.end(), point_less);
    if (has_coincidence(points_))
        throw Error(ErrorKind::coincidence, "configuration positions coincide");
}

MarkedConfiguration MarkedConfiguration::with_point(const MarkedPoint& p) const
{
    auto pts = points_;
    pts.push_back(p);
    return MarkedConfiguration(std::move(pts), dim_);
}

MarkedConfiguration
MarkedConfiguration::merged(const MarkedConfiguration& other) const
{
    auto pts = points_;
    pts.insert(pts.end(), other.points_.begin(), other.points_.end());
    return MarkedConfiguration(std::move(pts), dim_);
}

bool MarkedConfiguration::operator==(const MarkedConfiguration& o) const
{
    if (points_.size() != o.points_.size())
        return false;
    for (std::size_t i = 0; i < points_.size(); ++i)
    {
        if (points_[i].x != o.points_[i].x || points_[i].s != o.points_[i].s)
            return false;
    }
    return true;
}

double pair(const std::function<double(const MarkedPoint&)>& f,
            const MarkedConfiguration& omega)
{
    double total = 0;
    for (auto const& p : omega)
    {
        double v = f(p);
        if (!std::isfinite(v))
            throw Error(ErrorKind::evaluation, "non-finite pairing term");
        total += v;
    }
    return total;
}

double pair(const TestFunction& f, const MarkedConfiguration& omega)
{
    double total = 0;
    for (auto const& p : omega)
    {
        double v = f(p);
        if (!std::isfinite(v))
            throw Error(ErrorKind::evaluation, "non-finite pairing term");
        total += v;
    }
    return total;
}

std::size_t count(const MarkedBox& b, const MarkedConfiguration& omega)
{
    std::size_t n = 0;
    for (auto const& p : omega)
    {
        bool inside = p.s >= b.s_lo && p.s < b.s_hi;
        for (int i = 0; inside && i < b.x.dim; ++i)
            inside = p.x[i] >= b.x.lo[i] && p.x[i] < b.x.hi[i];
        n += inside;
    }
    return n;
}

//---------------------------------------------------------------------------//
MixingLaw::MixingLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms))
{
    if (atoms_.empty())
        throw Error(ErrorKind::model, "mixing law needs at least one atom");
    double total = 0;
    for (auto const& a : atoms_)
    {
        if (!(a.z >= 0) || !std::isfinite(a.z) || !(a.w > 0))
            throw Error(ErrorKind::model,
                        "mixing atoms need z >= 0 finite and w > 0");
        total += a.w;
    }
    if (std::abs(total - 1) > 1e-12)
        throw Error(ErrorKind::model, "mixing weights must sum to one");
}

double MixingLaw::mean() const
{
    double m = 0;
    for (auto const& a : atoms_)
        m += a.w * a.z;
    return m;
}

double MixingLaw::sample(Rng& rng) const
{
    double u = rng.uniform();
    double cdf = 0;
    for (auto const& a : atoms_)
    {
        cdf += a.w;
        if (u < cdf)
            return a.z;
    }
    return atoms_.back().z;
}

MarkedConfiguration sample_poisson(const LevyModel& model, const Box& window,
                                   Rng& rng, double intensity)
{
    double mass = intensity * model.sigma_mass(window);
    if (!std::isfinite(mass))
        throw Error(ErrorKind::sampling, "infinite window mass");
    std::uint64_t n = rng.poisson(mass);
    std::vector<MarkedPoint> pts;
    pts.reserve(n);
    for (std::uint64_t k = 0; k < n; ++k)
        pts.push_back(model.sample_point(window, rng));
    std::sort(pts.begin(), pts.end(), point_less);
    for (int attempt = 0; has_coincidence(pts); ++attempt)
    {
        if (attempt >= kMaxResample)
            throw Error(ErrorKind::sampling, "could not resolve coincidences");
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        {
            if (coincide(pts[i].x, pts[i + 1].x))
                pts[i + 1] = model.sample_point(window, rng);
        }
        std::sort(pts.begin(), pts.end(), point_less);
    }
    return MarkedConfiguration(std::move(pts), model.dim());
}

std::pair<double, MarkedConfiguration>
sample_mixed(const LevyModel& model, const MixingLaw& nu, const Box& window,
             Rng& rng)
{
    double z = nu.sample(rng);
    if (z == 0)
        return {0.0, MarkedConfiguration({}, model.dim())};
    return {z, sample_poisson(model, window, rng, z)};
}

//---------------------------------------------------------------------------//
CompoundMeasure to_compound(const MarkedConfiguration& omega)
{
    CompoundMeasure u;
    u.dim = omega.dim();
    u.atoms.reserve(omega.size());
    for (auto const& p : omega)
        u.atoms.push_back({p.x, p.s});
    return u;
}

MarkedConfiguration from_compound(const CompoundMeasure& u)
{
    std::vector<MarkedPoint> pts;
    pts.reserve(u.atoms.size());
    for (auto const& a : u.atoms)
        pts.push_back({a.x, a.weight});
    return MarkedConfiguration(std::move(pts), u.dim);
}

double pair_compound(const std::function<double(const Vec&)>& u,
                     const CompoundMeasure& upsilon)
{
    double total = 0;
    for (auto const& a : upsilon.atoms)
        total += a.weight * u(a.x);
    return total;
}

//---------------------------------------------------------------------------//
void write_csv(std::ostream& os, const MarkedConfiguration& omega)
{
    for (int i = 0; i < omega.dim(); ++i)
        os << 'x' << (i + 1) << ',';
    os << "s\n";
    char buf[32];
    for (auto const& p : omega)
    {
        for (int i = 0; i < omega.dim(); ++i)
        {
            std::snprintf(buf, sizeof buf, "%.17g", p.x[i]);
            os << buf << ',';
        }
        std::snprintf(buf, sizeof buf, "%.17g", p.s);
        os << buf << '\n';
    }
}

std::string to_csv(const MarkedConfiguration& omega)
{
    std::ostringstream os;
    write_csv(os, omega);
    return os.str();
}

}  // namespace mpcs
