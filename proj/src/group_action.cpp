// SPDX-License-Identifier: Apache-2.0
#include "mpcs/group_action.hpp"

#include <algorithm>

namespace mpcs
{

GroupElement::GroupElement(int dim, FlowOptions opts)
    : dim_(dim), opts_(opts)
{
}

GroupElement GroupElement::from_lie(const LieElement& xi, double time,
                                    FlowOptions opts)
{
    GroupElement g(xi.dim(), opts);
    g.word_.push_back({xi, time, false});
    return g;
}

Box GroupElement::support() const
{
    Box total = Box::cube(dim_, 0, 0);
    bool first = true;
    for (auto const& w : word_)
    {
        Box b = w.xi.support().padded(w.xi.speed_bound() * std::abs(w.time));
        total = first ? b : total.unite(b);
        first = false;
    }
    if (first)
    {
        // Identity: empty support
        total = Box::cube(dim_, 0, 0);
        total.hi[0] = -1;
    }
    return total;
}

GroupElement compose(const GroupElement& g1, const GroupElement& g2)
{
    GroupElement g(g1.dim_, g1.opts_);
    g.word_ = g1.word_;
    g.word_.insert(g.word_.end(), g2.word_.begin(), g2.word_.end());
    return g;
}

GroupElement inverse(const GroupElement& g)
{
    GroupElement r(g.dim_, g.opts_);
    r.word_.assign(g.word_.rbegin(), g.word_.rend());
    for (auto& w : r.word_)
        w.inverted = !w.inverted;
    return r;
}

namespace
{
// Apply one generator to a point, accumulating the Jacobian determinant of
// the map (x, s) -> (x', s') if requested.
MarkedPoint apply_generator(const GroupGenerator& w, const MarkedPoint& p,
                            const FlowOptions& opts, double* jac)
{
    MarkedPoint out = p;
    if (!w.xi.support().contains(p.x))
        return out;
    double t = w.inverted ? -w.time : w.time;
    if (jac)
    {
        auto st = flow_with_jacobian(w.xi, t, p.x, opts);
        out.x = st.x;
        *jac *= determinant(st.jacobian);
    }
    else
    {
        out.x = flow(w.xi, t, p.x, opts);
    }
    if (!w.inverted)
    {
        // s' = theta(psi(x)) s
        double theta = std::exp(w.time * w.xi.current_exponent(out.x));
        out.s = theta * p.s;
        if (jac)
            *jac *= theta;
    }
    else
    {
        // s' = s / theta(x)
        double theta = std::exp(w.time * w.xi.current_exponent(p.x));
        out.s = p.s / theta;
        if (jac)
            *jac /= theta;
    }
    return out;
}
}  // namespace

MarkedPoint act_point(const GroupElement& g, const MarkedPoint& p)
{
    MarkedPoint cur = p;
    for (auto it = g.word().rbegin(); it != g.word().rend(); ++it)
        cur = apply_generator(*it, cur, g.flow_options(), nullptr);
    return cur;
}

PointImage act_point_with_jacobian(const GroupElement& g, const MarkedPoint& p)
{
    PointImage img{p, 1};
    for (auto it = g.word().rbegin(); it != g.word().rend(); ++it)
        img.p = apply_generator(*it, img.p, g.flow_options(), &img.jacobian);
    return img;
}

MarkedConfiguration act_config(const GroupElement& g,
                               const MarkedConfiguration& omega)
{
    if (g.is_identity())
        return omega;
    Box k = g.support();
    std::vector<MarkedPoint> pts;
    pts.reserve(omega.size());
    for (auto const& p : omega)
        pts.push_back(k.contains(p.x) ? act_point(g, p) : p);
    return MarkedConfiguration(std::move(pts), omega.dim());
}

double rn_point(const GroupElement& g, const LevyModel& model,
                const MarkedPoint& p)
{
    if (g.is_identity() || !g.support().contains(p.x))
        return 1;
    auto pre = act_point_with_jacobian(inverse(g), p);
    double q_here = model.q(p);
    double q_pre = model.q(pre.p);
    if (!(q_here > 0) || !(q_pre > 0) || !std::isfinite(q_here)
        || !std::isfinite(q_pre))
        return 1;
    return q_pre * std::abs(pre.jacobian) / q_here;
}

double rn_config(const GroupElement& g, const LevyModel& model,
                 const MarkedConfiguration& omega)
{
    if (g.is_identity())
        return 1;
    Box k = g.support();
    GroupElement ginv = inverse(g);
    double prod = 1;
    for (auto const& p : omega)
    {
        if (!k.contains(p.x))
            continue;
        auto pre = act_point_with_jacobian(ginv, p);
        double q_here = model.q(p);
        double q_pre = model.q(pre.p);
        if (q_here > 0 && q_pre > 0 && std::isfinite(q_here)
            && std::isfinite(q_pre))
            prod *= q_pre * std::abs(pre.jacobian) / q_here;
    }
    return prod;
}

double unitary_rep(const GroupElement& g, const LevyModel& model,
                   const ConfigFunctional& f, const MarkedConfiguration& omega)
{
    if (g.is_identity())
        return f(omega);
    return f(act_config(inverse(g), omega))
           * std::sqrt(rn_config(g, model, omega));
}

double compound_density(const GroupElement& g, const LevyModel& model,
                        const CompoundMeasure& upsilon)
{
    return rn_config(g, model, from_compound(upsilon));
}

}  // namespace mpcs
