// SPDX-License-Identifier: Apache-2.0
#include "mpcs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mpcs/chaos_fock.hpp"
#include "mpcs/group_action.hpp"
#include "mpcs/quadrature.hpp"
#include "mpcs/semigroup.hpp"

namespace mpcs
{

using nlohmann::json;

//---------------------------------------------------------------------------//
void ExperimentReport::add(std::string label, const McEstimate& est)
{
    estimates.push_back({std::move(label), est});
}

void ExperimentReport::add_residual(std::string label, double value,
                                    double tolerance)
{
    ResidualEntry r;
    r.label = std::move(label);
    r.value = value;
    r.tolerance = tolerance;
    r.pass = std::isfinite(value) && value <= tolerance;
    residuals.push_back(std::move(r));
}

void ExperimentReport::add_lower_bound(std::string label, double value,
                                       double bound)
{
    ResidualEntry r;
    r.label = std::move(label);
    r.value = value;
    r.tolerance = bound;
    r.lower_bound = true;
    r.pass = std::isfinite(value) && value >= bound;
    residuals.push_back(std::move(r));
}

void ExperimentReport::finalize()
{
    verdict = true;
    for (auto const& e : estimates)
        verdict = verdict && e.est.pass;
    for (auto const& r : residuals)
        verdict = verdict && r.pass;
}

//---------------------------------------------------------------------------//
namespace
{

double uniform(Rng& rng, double a, double b)
{
    return a + (b - a) * rng.uniform();
}

// |a - b| scaled by max(|b|, 1)
double rel_error(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1.0);
}

struct Context
{
    const ExperimentConfig& cfg;
    std::string name;
    std::size_t n;
    double z;
    double tol_scale;
    ExperimentReport report;

    Context(const ExperimentConfig& c, std::string nm)
        : cfg(c), name(std::move(nm)), n(c.samples_for(name, c.samples)),
          z(c.z_max_for(name)), tol_scale(c.tolerance_scale_for(name))
    {
        report.name = name;
    }

    int dim() const { return cfg.model.dim(); }
    RngSpec spec(const std::string& label) const
    {
        return {cfg.seed, stream_id(name + ":" + label)};
    }
    Rng fixture_rng(const std::string& label = "") const
    {
        return Rng(cfg.fixture_seed, stream_id("fixture:" + name + label));
    }
    Rng omega_rng(std::uint64_t i) const
    {
        return Rng(cfg.seed, stream_id(name + ":omega"), i);
    }
    ConfigurationSampler poisson() const
    {
        return {cfg.model, cfg.window, std::nullopt};
    }
    ConfigurationSampler configured() const
    {
        return {cfg.model, cfg.window, cfg.measure};
    }

    void target(std::string label, const McEstimate& est, double t)
    {
        report.add(std::move(label), with_target(est, t, z));
    }
    void residual(std::string label, double value, double tol)
    {
        report.add_residual(std::move(label), value, tol * tol_scale);
    }
    ExperimentReport finish()
    {
        report.finalize();
        return std::move(report);
    }
};

//---------------------------------------------------------------------------//
// Fixture generation

Factor x_bump(Rng& rng, const Box& w, int axis)
{
    double lo = w.lo[axis];
    double width = w.hi[axis] - lo;
    double c = uniform(rng, lo + 0.3 * width, lo + 0.7 * width);
    double r = uniform(rng, 0.15 * width, 0.3 * width);
    return Factor::bump(c, r);
}

TestFunction random_test_function(Rng& rng, const Box& w, int dim,
                                  double amp_lo = 0.3, double amp_hi = 0.9,
                                  bool signed_amp = true)
{
    TestFunction::Term t;
    t.amp = uniform(rng, amp_lo, amp_hi);
    if (signed_amp && rng.uniform() < 0.5)
        t.amp = -t.amp;
    for (int i = 0; i < dim; ++i)
        t.x.push_back(x_bump(rng, w, i));
    if (rng.uniform() < 0.5)
    {
        t.s = Factor::bump(uniform(rng, 0.6, 1.6), uniform(rng, 0.3, 0.55));
    }
    else
    {
        t.s = Factor::bump(uniform(rng, -0.5, 0.5), uniform(rng, 0.5, 1.0));
        t.log_mark = true;
    }
    return TestFunction(dim, {t});
}

SpatialField random_field(Rng& rng, const Box& w, int dim, double amp)
{
    std::vector<Factor> f;
    for (int i = 0; i < dim; ++i)
        f.push_back(x_bump(rng, w, i));
    return SpatialField::separable(uniform(rng, -amp, amp), std::move(f));
}

LieElement random_lie(Rng& rng, const Box& w, int dim, bool with_v = true,
                      bool with_a = true)
{
    std::vector<SpatialField> v(dim, SpatialField(dim));
    if (with_v)
        for (int i = 0; i < dim; ++i)
            v[i] = random_field(rng, w, dim, 1.0);
    SpatialField a(dim);
    if (with_a)
        a = random_field(rng, w, dim, 1.0);
    return LieElement(std::move(v), std::move(a));
}

TestFunction fixture_tf(const Context& c, Rng& rng, int i)
{
    if (!c.cfg.test_functions.empty())
        return c.cfg.test_functions[i % c.cfg.test_functions.size()];
    return random_test_function(rng, c.cfg.window, c.dim());
}

LieElement fixture_lie(const Context& c, Rng& rng, int i)
{
    if (!c.cfg.lie_elements.empty())
        return c.cfg.lie_elements[i % c.cfg.lie_elements.size()];
    return random_lie(rng, c.cfg.window, c.dim());
}

//! Group elements: full (v, a) flows and flow-after-current words
GroupElement fixture_group(const Context& c, Rng& rng, int i)
{
    if (!c.cfg.lie_elements.empty())
        return GroupElement::from_lie(
            c.cfg.lie_elements[i % c.cfg.lie_elements.size()], 1, c.cfg.flow);
    if (i % 2 == 0)
        return GroupElement::from_lie(random_lie(rng, c.cfg.window, c.dim()),
                                      1, c.cfg.flow);
    auto flow = GroupElement::from_lie(
        random_lie(rng, c.cfg.window, c.dim(), true, false), 1, c.cfg.flow);
    auto cur = GroupElement::from_lie(
        random_lie(rng, c.cfg.window, c.dim(), false, true), 1, c.cfg.flow);
    return compose(flow, cur);
}

//! Bounded outer function of the given arity
OuterFunction random_outer(Rng& rng, int arity)
{
    std::vector<double> c(arity);
    for (auto& x : c)
        x = uniform(rng, 0.5, 1.5) * (rng.uniform() < 0.5 ? -1 : 1);
    int kind = static_cast<int>(rng.uniform() * 3);
    if (kind == 0 || (kind == 2 && arity < 2))
        return OuterFunction::sine(c, uniform(rng, 0, 1));
    if (kind == 1)
    {
        for (auto& x : c)
            x = std::abs(x);
        return OuterFunction::gaussian(c);
    }
    std::vector<double> head{c[0]};
    std::vector<double> tail;
    for (int j = 1; j < arity; ++j)
        tail.push_back(std::abs(c[j]));
    return OuterFunction::product(OuterFunction::sine(head, 0.3),
                                  OuterFunction::gaussian(tail));
}

CylinderFunction fixture_cylinder(const Context& c, Rng& rng, int i, int arity)
{
    std::vector<TestFunction> phis;
    for (int j = 0; j < arity; ++j)
        phis.push_back(fixture_tf(c, rng, i * arity + j));
    return CylinderFunction(std::move(phis), random_outer(rng, arity));
}

//! omega with k extra sigma~-distributed points in the window
MarkedConfiguration enrich(const MarkedConfiguration& omega,
                           const LevyModel& model, const Box& window, Rng& rng,
                           int k)
{
    auto w = omega;
    for (int i = 0; i < k; ++i)
    {
        auto p = model.sample_point(window, rng);
        try
        {
            w = w.with_point(p);
        }
        catch (const Error&)
        {
        }
    }
    return w;
}

//! psi overlapping phi: same type of bump, shifted centres
TestFunction overlapping(Rng& rng, const TestFunction& phi, int dim)
{
    auto const* terms = phi.terms();
    if (!terms || terms->empty())
        return phi;
    auto t = terms->front();
    t.amp = uniform(rng, 0.3, 0.8) * (rng.uniform() < 0.5 ? -1 : 1);
    for (auto& f : t.x)
        f = Factor::bump(f.p0() + uniform(rng, -0.3, 0.3) * f.p1(),
                         f.p1() * uniform(rng, 0.8, 1.2));
    t.s = Factor::bump(t.s.p0() + uniform(rng, -0.2, 0.2) * t.s.p1(),
                       t.s.p1() * uniform(rng, 0.8, 1.2));
    return TestFunction(dim, {t});
}

//---------------------------------------------------------------------------//
// Tensor-product quadrature helpers on X x R+

struct XNode
{
    Vec x{0, 0, 0};
    double w = 0;
};

std::vector<XNode> x_nodes(const Box& b, int dim, int order,
                           const std::array<std::vector<double>, kMaxDim>& br)
{
    std::vector<XNode> nodes{{Vec{0, 0, 0}, 1.0}};
    for (int axis = 0; axis < dim; ++axis)
    {
        auto rule = composite_gauss_legendre(order, b.lo[axis], b.hi[axis],
                                             br[axis]);
        std::vector<XNode> next;
        for (auto const& n : nodes)
        {
            for (std::size_t k = 0; k < rule.nodes.size(); ++k)
            {
                XNode m = n;
                m.x[axis] = rule.nodes[k];
                m.w *= rule.weights[k];
                next.push_back(m);
            }
        }
        nodes = std::move(next);
    }
    return nodes;
}

std::vector<double> even_breaks(double lo, double hi, int panels)
{
    std::vector<double> b;
    for (int k = 1; k < panels; ++k)
        b.push_back(lo + (hi - lo) * k / panels);
    return b;
}

void append(std::vector<double>& to, const std::vector<double>& from)
{
    to.insert(to.end(), from.begin(), from.end());
}

constexpr int kOracleOrder = 48;
constexpr int kOraclePanels = 8;

//! int f(phi(g(x, s))) dsigma~ over the window
double pushforward_integral(const GroupElement& g, const LevyModel& model,
                            const Box& window, const TestFunction& phi,
                            const std::function<double(double)>& f)
{
    int dim = model.dim();
    auto sup = phi.support();
    auto ginv = inverse(g);
    std::array<std::vector<double>, kMaxDim> br;
    for (int axis = 0; axis < dim; ++axis)
    {
        br[axis] = even_breaks(window.lo[axis], window.hi[axis], kOraclePanels);
        for (auto const& gen : g.word())
            append(br[axis], gen.xi.breakpoints(axis));
        if (dim == 1)
        {
            // kinks of phi o g sit at the preimages of phi's kinks
            for (double b : phi.x_breakpoints(0))
                br[0].push_back(act_point(ginv, {{b, 0, 0}, 1}).x[0]);
        }
    }
    auto xs = x_nodes(window, dim, kOracleOrder, br);
    auto s_br = phi.s_breakpoints();
    std::vector<double> terms;
    for (auto const& xn : xs)
    {
        double theta = act_point(g, {xn.x, 1}).s;
        double lo = sup.s_lo / theta;
        double hi = sup.s_hi / theta;
        std::vector<double> b;
        for (double v : s_br)
            b.push_back(v / theta);
        append(b, even_breaks(lo, hi, kOraclePanels));
        auto rule = composite_gauss_legendre(kOracleOrder, lo, hi, b);
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        {
            MarkedPoint p{xn.x, rule.nodes[k]};
            double v = f(phi(act_point(g, p)));
            if (v != 0)
                terms.push_back(xn.w * rule.weights[k] * v * model.q(p));
        }
    }
    return pairwise_sum(terms);
}

//! int f(phi) rn_point(g, .) dsigma~ over the support of phi
double rn_weighted_integral(const GroupElement& g, const LevyModel& model,
                            const TestFunction& phi,
                            const std::function<double(double)>& f)
{
    int dim = model.dim();
    auto sup = phi.support();
    std::array<std::vector<double>, kMaxDim> br;
    for (int axis = 0; axis < dim; ++axis)
    {
        br[axis] = phi.x_breakpoints(axis);
        append(br[axis],
               even_breaks(sup.x.lo[axis], sup.x.hi[axis], kOraclePanels));
        for (auto const& gen : g.word())
            append(br[axis], gen.xi.breakpoints(axis));
    }
    auto xs = x_nodes(sup.x, dim, kOracleOrder, br);
    auto s_br = phi.s_breakpoints();
    append(s_br, even_breaks(sup.s_lo, sup.s_hi, kOraclePanels));
    auto rule = composite_gauss_legendre(kOracleOrder, sup.s_lo, sup.s_hi,
                                         s_br);
    std::vector<double> terms;
    for (auto const& xn : xs)
    {
        for (std::size_t k = 0; k < rule.nodes.size(); ++k)
        {
            MarkedPoint p{xn.x, rule.nodes[k]};
            double v = f(phi(p));
            if (v != 0)
                terms.push_back(xn.w * rule.weights[k] * v * model.q(p)
                                * rn_point(g, model, p));
        }
    }
    return pairwise_sum(terms);
}

double identity_fn(double v) { return v; }

//---------------------------------------------------------------------------//
// Experiments

ExperimentReport run_laplace(const ExperimentConfig& cfg)
{
    Context c(cfg, "laplace");
    auto rng = c.fixture_rng();
    std::vector<TestFunction> phis;
    std::vector<double> targets;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        TestFunction phi;
        if (cfg.test_functions.empty())
        {
            auto t = random_test_function(rng, cfg.window, c.dim(), 0.3, 1.5,
                                          false)
                         .terms()
                         ->front();
            t.amp = -t.amp;
            phi = TestFunction(c.dim(), {t});
        }
        else
        {
            phi = fixture_tf(c, rng, i);
        }
        double mass = integrate_sigma(
            [&](const MarkedPoint& p) { return std::expm1(phi(p)); },
            cfg.model, rule_for(phi));
        targets.push_back(std::exp(mass));
        phis.push_back(std::move(phi));
    }
    auto sampler = c.poisson();
    auto table = run_samples(c.n, phis.size(), c.spec("exp"), cfg.workers,
                             [&](Rng& r, std::span<double> out) {
                                 auto omega = sampler(r);
                                 for (std::size_t i = 0; i < phis.size(); ++i)
                                     out[i] = std::exp(pair(phis[i], omega));
                             });
    auto est = table.estimates();
    for (std::size_t i = 0; i < phis.size(); ++i)
        c.target("E exp<phi_" + std::to_string(i) + ">", est[i], targets[i]);
    return c.finish();
}

ExperimentReport run_quasiinv(const ExperimentConfig& cfg)
{
    Context c(cfg, "quasiinv");
    auto rng = c.fixture_rng();
    std::vector<GroupElement> gs;
    std::vector<CylinderFunction> fs;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        gs.push_back(fixture_group(c, rng, i));
        auto phi = fixture_tf(c, rng, i);
        fs.emplace_back(std::vector<TestFunction>{phi},
                        OuterFunction::sine({uniform(rng, 1, 2)},
                                            uniform(rng, 0, 1)));
        double lhs = pushforward_integral(gs.back(), cfg.model, cfg.window, phi,
                                          identity_fn);
        double rhs = rn_weighted_integral(gs.back(), cfg.model, phi,
                                          identity_fn);
        c.residual("change of variables g_" + std::to_string(i),
                   std::abs(lhs - rhs), 1e-5);
    }
    auto sampler = c.poisson();
    auto table = run_samples(
        c.n, gs.size(), c.spec("paired"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto omega = sampler(r);
            for (std::size_t i = 0; i < gs.size(); ++i)
                out[i] = fs[i](act_config(gs[i], omega))
                         - fs[i](omega) * rn_config(gs[i], cfg.model, omega);
        });
    auto est = table.estimates();
    for (std::size_t i = 0; i < gs.size(); ++i)
        c.target("E[F(g w)] - E[F rn_g] fixture " + std::to_string(i), est[i],
                 0);
    return c.finish();
}

ExperimentReport run_image_measure(const ExperimentConfig& cfg)
{
    Context c(cfg, "image_measure");
    auto rng = c.fixture_rng();
    std::vector<GroupElement> gs;
    std::vector<TestFunction> phis;
    std::vector<double> targets;
    auto expm1_fn = [](double v) { return std::expm1(v); };
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        gs.push_back(fixture_group(c, rng, i));
        phis.push_back(fixture_tf(c, rng, i));
        double direct = pushforward_integral(gs.back(), cfg.model, cfg.window,
                                             phis.back(), expm1_fn);
        double pushed = rn_weighted_integral(gs.back(), cfg.model, phis.back(),
                                             expm1_fn);
        c.residual("g*sigma~ Laplace exponent " + std::to_string(i),
                   std::abs(direct - pushed), 1e-5);
        targets.push_back(std::exp(direct));
    }
    auto sampler = c.poisson();
    auto table = run_samples(c.n, gs.size(), c.spec("laplace"), cfg.workers,
                             [&](Rng& r, std::span<double> out) {
                                 auto omega = sampler(r);
                                 for (std::size_t i = 0; i < gs.size(); ++i)
                                     out[i] = std::exp(pair(
                                         phis[i], act_config(gs[i], omega)));
                             });
    auto est = table.estimates();
    for (std::size_t i = 0; i < gs.size(); ++i)
        c.target("E exp<phi, g w> fixture " + std::to_string(i), est[i],
                 targets[i]);
    return c.finish();
}

ExperimentReport run_compound(const ExperimentConfig& cfg)
{
    Context c(cfg, "compound");
    auto rng = c.fixture_rng();
    std::vector<GroupElement> gs;
    std::vector<SpatialField> us;
    std::vector<double> phases;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        gs.push_back(fixture_group(c, rng, i));
        std::vector<Factor> f;
        for (int k = 0; k < c.dim(); ++k)
            f.push_back(x_bump(rng, cfg.window, k));
        us.push_back(SpatialField::separable(uniform(rng, 0.5, 1.5), f));
        phases.push_back(uniform(rng, 0, 1));
    }
    auto functional = [&](std::size_t i, const CompoundMeasure& u) {
        return std::sin(
            pair_compound([&](const Vec& x) { return us[i].value(x); }, u)
            + phases[i]);
    };

    // exact bijection checks on sampled configurations
    auto sampler = c.poisson();
    double round_trip = 0;
    double pairing = 0;
    double density = 0;
    for (int k = 0; k < 20; ++k)
    {
        auto r = c.omega_rng(k);
        auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 2);
        auto u = to_compound(omega);
        round_trip = std::max(round_trip, from_compound(u) == omega ? 0.0 : 1.0);
        for (std::size_t i = 0; i < gs.size(); ++i)
        {
            double a = pair_compound(
                [&](const Vec& x) { return us[i].value(x); }, u);
            double b = pair(
                [&](const MarkedPoint& p) { return p.s * us[i].value(p.x); },
                omega);
            pairing = std::max(pairing, rel_error(a, b));
            density = std::max(density,
                               std::abs(compound_density(gs[i], cfg.model, u)
                                        - rn_config(gs[i], cfg.model, omega)));
        }
    }
    c.residual("round trip from_compound(to_compound(w)) != w", round_trip, 0);
    c.residual("<u, I w> vs <s u, w>", pairing, 1e-12);
    c.residual("compound density vs rn_config", density, 0);

    auto table = run_samples(
        c.n, gs.size(), c.spec("paired"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto u = to_compound(sampler(r));
            for (std::size_t i = 0; i < gs.size(); ++i)
            {
                auto moved = to_compound(act_config(gs[i], from_compound(u)));
                out[i] = functional(i, moved)
                         - functional(i, u) * compound_density(gs[i], cfg.model, u);
            }
        });
    auto est = table.estimates();
    for (std::size_t i = 0; i < gs.size(); ++i)
        c.target("E[U(g u)] - E[U(u) density] fixture " + std::to_string(i),
                 est[i], 0);
    return c.finish();
}

//! Models with position-dependent and non-exponential marks on the window
std::vector<LevyModel> ibp_models(const ExperimentConfig& cfg)
{
    int dim = cfg.model.dim();
    const Box& w = cfg.window;
    std::vector<Factor> centre;
    Vec mid{0, 0, 0};
    double width = 0;
    for (int i = 0; i < dim; ++i)
    {
        mid[i] = 0.5 * (w.lo[i] + w.hi[i]);
        width = std::max(width, w.hi[i] - w.lo[i]);
        centre.push_back(Factor::bump(mid[i], 0.45 * (w.hi[i] - w.lo[i])));
    }
    auto profile = SpatialField::separable(1.0, centre);

    std::vector<LevyModel> models{cfg.model};
    SpatialSpec uni;
    uni.box = w;
    uni.level = 2;

    MarkSpec logn;
    logn.family = MarkFamily::lognormal;
    logn.mu = 0.1;
    logn.mu_slope = 0.5;
    logn.sigma2 = 0.5;
    logn.profile = profile;
    models.emplace_back(dim, uni, logn);

    MarkSpec gam;
    gam.family = MarkFamily::gamma;
    gam.shape = 2.5;
    gam.rate = 1.5;
    models.emplace_back(dim, uni, gam);

    MarkSpec expo;
    expo.rate = 1.2;
    expo.rate_slope = 0.6;
    expo.profile = profile;
    SpatialSpec gauss;
    gauss.family = SpatialFamily::gaussian;
    gauss.level = 3;
    gauss.mean = mid;
    gauss.variance = 0.1 * width * width;
    models.emplace_back(dim, gauss, expo);
    return models;
}

ExperimentReport run_base_ibp(const ExperimentConfig& cfg)
{
    Context c(cfg, "base_ibp");
    auto rng = c.fixture_rng();
    auto models = ibp_models(cfg);
    const char* names[] = {"config", "lognormal", "gamma", "gaussian"};
    int count = std::max(10, cfg.fixtures);
    for (int i = 0; i < count; ++i)
    {
        auto xi = fixture_lie(c, rng, i);
        auto phi1 = fixture_tf(c, rng, 2 * i);
        auto phi2 = cfg.test_functions.empty() ? overlapping(rng, phi1, c.dim())
                                               : fixture_tf(c, rng, 2 * i + 1);
        std::size_t m = i % models.size();
        double r = base_ibp_residual(xi, phi1, phi2, models[m], 64);
        c.residual("fixture " + std::to_string(i) + " (" + names[m] + ")",
                   std::abs(r), 1e-6);
    }

    // negative control: integrate against q (1 + x/2) but keep beta from q
    int dim = c.dim();
    const Box& w = cfg.window;
    std::vector<Factor> xf;
    std::vector<Factor> vf;
    for (int i = 0; i < dim; ++i)
    {
        double mid = 0.5 * (w.lo[i] + w.hi[i]);
        double width = w.hi[i] - w.lo[i];
        xf.push_back(Factor::bump(mid, 0.25 * width));
        vf.push_back(Factor::bump(mid, 0.4 * width));
    }
    auto phi = TestFunction::separable(1.0, xf, Factor::bump(1.0, 0.5));
    std::vector<SpatialField> v(dim, SpatialField(dim));
    v[0] = SpatialField::separable(0.5, vf);
    LieElement xi(v, SpatialField(dim));
    auto perturbed = [&](const MarkedPoint& p) {
        return cfg.model.q(p) * (1 + 0.5 * (p.x[0] - w.lo[0]) / (w.hi[0] - w.lo[0]));
    };
    double bad = base_ibp_residual(xi, phi, phi, cfg.model, 64, perturbed);
    c.report.add_lower_bound("negative control, perturbed q", std::abs(bad),
                             1e-4);
    return c.finish();
}

ExperimentReport run_ibp_common(const ExperimentConfig& cfg,
                                const std::string& name,
                                std::optional<MixingLaw> mixing)
{
    Context c(cfg, name);
    auto rng = c.fixture_rng();
    ConfigurationSampler sampler{cfg.model, cfg.window, std::move(mixing)};
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        auto xi = fixture_lie(c, rng, i);
        auto f = fixture_cylinder(c, rng, 2 * i, 2);
        auto g = fixture_cylinder(c, rng, 2 * i + 1, 1);
        auto est = ibp_residual(f, g, xi, sampler, c.n,
                                c.spec("fixture" + std::to_string(i)),
                                cfg.workers);
        c.target("E[grad F G + F grad G + F G B] fixture " + std::to_string(i),
                 est, 0);
    }
    return c.finish();
}

ExperimentReport run_ibp(const ExperimentConfig& cfg)
{
    return run_ibp_common(cfg, "ibp", cfg.measure);
}

ExperimentReport run_ibp_mixed(const ExperimentConfig& cfg)
{
    return run_ibp_common(cfg, "ibp_mixed", cfg.mixture);
}

ExperimentReport run_divergence(const ExperimentConfig& cfg)
{
    Context c(cfg, "divergence");
    auto rng = c.fixture_rng();
    std::vector<CylinderField> fields;
    std::vector<CylinderFunction> fs;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        CylinderField v;
        for (int j = 0; j < 2; ++j)
            v.push_back({fixture_cylinder(c, rng, 3 * i + j, 1),
                         fixture_lie(c, rng, 2 * i + j)});
        fields.push_back(std::move(v));
        fs.push_back(fixture_cylinder(c, rng, 3 * i + 2, 1));
    }

    // constant fields: divergence equals B (lifted base divergence)
    auto sampler = c.configured();
    double constant_gap = 0;
    for (int k = 0; k < 20; ++k)
    {
        auto r = c.omega_rng(k);
        auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 2);
        for (auto const& v : fields)
        {
            CylinderField one{{CylinderFunction::constant(c.dim(), 1), v[0].xi}};
            double b = log_derivative_B(v[0].xi, cfg.model, omega);
            constant_gap = std::max(
                constant_gap, rel_error(divergence_cyl(one, cfg.model, omega), b));
        }
    }
    c.residual("div(1 * (v, a)) vs B_(v,a)", constant_gap, 1e-12);

    auto table = run_samples(
        c.n, fields.size(), c.spec("duality"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto omega = sampler(r);
            for (std::size_t i = 0; i < fields.size(); ++i)
                out[i] = tangent_inner(field_at(fields[i], omega),
                                       gradient(fs[i], omega))
                         + fs[i](omega)
                               * divergence_cyl(fields[i], cfg.model, omega);
        });
    auto est = table.estimates();
    for (std::size_t i = 0; i < fields.size(); ++i)
        c.target("E<V, grad F> + E[F div V] fixture " + std::to_string(i),
                 est[i], 0);
    return c.finish();
}

ExperimentReport run_dirichlet(const ExperimentConfig& cfg)
{
    Context c(cfg, "dirichlet");
    auto rng = c.fixture_rng();
    std::vector<CylinderFunction> fs;
    std::vector<CylinderFunction> gs;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        fs.push_back(fixture_cylinder(c, rng, 2 * i, 2));
        gs.push_back(fixture_cylinder(c, rng, 2 * i + 1, 1));

        // base level: (H phi, xi) = E(phi, xi) by quadrature
        auto phi = fs.back().phis()[0];
        auto psi = gs.back().phis()[0];
        auto spec = spec_for_support(phi.support(), 64);
        add_breaks(spec, psi);
        QuadratureRule rule(spec);
        double lhs = integrate_sigma(
            [&](const MarkedPoint& p) {
                return base_dirichlet_apply(cfg.model, phi, p) * psi(p);
            },
            cfg.model, rule);
        double rhs = integrate_sigma(
            [&](const MarkedPoint& p) {
                auto a = phi.jet(p);
                auto b = psi.jet(p);
                return dot(a.grad, b.grad) + p.s * p.s * a.ds * b.ds;
            },
            cfg.model, rule);
        c.residual("(H phi, xi) vs E(phi, xi) fixture " + std::to_string(i),
                   std::abs(lhs - rhs), 1e-5);
    }
    auto sampler = c.configured();
    auto table = run_samples(
        c.n, 2 * fs.size(), c.spec("duality"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto omega = sampler(r);
            for (std::size_t i = 0; i < fs.size(); ++i)
            {
                out[2 * i] = dirichlet_operator_apply(cfg.model, fs[i], omega)
                             * gs[i](omega);
                out[2 * i + 1] = dirichlet_integrand(fs[i], gs[i], omega);
            }
        });
    auto est = table.estimates();
    for (std::size_t i = 0; i < fs.size(); ++i)
        c.target("E[H F G] - E<grad F, grad G> fixture " + std::to_string(i),
                 difference(est[2 * i], est[2 * i + 1]), 0);
    return c.finish();
}

ExperimentReport run_derivative(const ExperimentConfig& cfg)
{
    Context c(cfg, "derivative");
    auto rng = c.fixture_rng();
    auto sampler = c.poisson();
    FlowDifference fd{1e-4, true, cfg.flow};
    double fd_err = 0;
    double duality = 0;
    double split = 0;
    double lifting = 0;
    double product_rule = 0;
    for (int i = 0; i < 100; ++i)
    {
        auto xi = fixture_lie(c, rng, i);
        auto f = fixture_cylinder(c, rng, 2 * i, 2);
        auto g = fixture_cylinder(c, rng, 2 * i + 1, 1);
        auto r = c.omega_rng(i);
        auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 3);

        double d = dir_derivative(xi, f, omega);
        double num = flow_derivative(
            xi, [&](const MarkedConfiguration& w) { return f(w); }, omega, fd);
        fd_err = std::max(fd_err, rel_error(d, num));

        duality = std::max(
            duality, rel_error(tangent_inner(gradient(f, omega), lift(xi, omega)), d));
        split = std::max(split,
                         rel_error(dir_derivative(xi.vector_part(), f, omega)
                                       + dir_derivative(xi.current_part(), f, omega),
                                   d));

        auto const& phi = f.phis()[0];
        double lin = dir_derivative(xi, CylinderFunction::linear(phi), omega);
        double base = pair(
            [&](const MarkedPoint& p) {
                return directional_derivative_base(xi, phi, p);
            },
            omega);
        lifting = std::max(lifting, rel_error(lin, base));

        double fg = dir_derivative(xi, product(f, g), omega);
        double rule = f(omega) * dir_derivative(xi, g, omega)
                      + g(omega) * dir_derivative(xi, f, omega);
        product_rule = std::max(product_rule, rel_error(fg, rule));
    }
    c.residual("dir_derivative vs flow difference, 100 fixtures", fd_err, 1e-5);
    c.residual("<grad F, lift(v, a)> vs dir_derivative", duality, 1e-12);
    c.residual("grad_(v,a) = grad_v + grad_a", split, 1e-12);
    c.residual("grad <phi, .> = <grad phi, .>", lifting, 1e-12);
    c.residual("product rule", product_rule, 1e-10);
    return c.finish();
}

ExperimentReport run_lie(const ExperimentConfig& cfg)
{
    Context c(cfg, "lie");
    auto rng = c.fixture_rng();
    auto sampler = c.poisson();
    FlowDifference fd{1e-5, true, FlowOptions{}};
    double bracket = 0;
    double commutator = 0;
    double currents = 0;
    double vector_only = 0;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        auto xi1 = fixture_lie(c, rng, 2 * i);
        auto xi2 = fixture_lie(c, rng, 2 * i + 1);
        auto phi = fixture_tf(c, rng, i);
        auto f = fixture_cylinder(c, rng, i, 2);
        auto br = lie_bracket(xi1, xi2);
        auto cur = lie_bracket(xi1.current_part(), xi2.current_part());
        auto vec = lie_bracket(xi1.vector_part(), xi2.vector_part());
        for (int k = 0; k < 10; ++k)
        {
            MarkedPoint p;
            auto sup = phi.support();
            for (int a = 0; a < c.dim(); ++a)
                p.x[a] = uniform(rng, sup.x.lo[a], sup.x.hi[a]);
            p.s = uniform(rng, sup.s_lo, sup.s_hi);
            bracket = std::max(bracket, bracket_residual(xi1, xi2, phi, p, fd));
            auto jc = cur.jet(p.x);
            currents = std::max({currents, norm(jc.v), std::abs(jc.a)});
            vector_only = std::max(vector_only, std::abs(vec.jet(p.x).a));
        }
        (void)br;
        for (int k = 0; k < 4; ++k)
        {
            auto r = c.omega_rng(i * 4 + k);
            auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 3);
            commutator = std::max(
                commutator, commutator_residual(xi1, xi2, cfg.model, f, omega, fd));
        }
    }
    c.residual("grad_[xi1,xi2] phi vs commutator of base derivatives", bracket,
               1e-4);
    c.residual("[D1, D2] F vs D_[xi1,xi2] F, D = grad + B/2", commutator, 1e-4);
    c.residual("[(0, a1), (0, a2)] = 0", currents, 0);
    c.residual("current part of [(v1, 0), (v2, 0)]", vector_only, 0);
    return c.finish();
}

ExperimentReport run_unitary(const ExperimentConfig& cfg)
{
    Context c(cfg, "unitary");
    auto rng = c.fixture_rng();
    std::vector<GroupElement> gs;
    std::vector<CylinderFunction> fs;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        gs.push_back(fixture_group(c, rng, i));
        fs.push_back(fixture_cylinder(c, rng, i, 2));
    }
    auto sampler = c.poisson();
    double group_law = 0;
    double identity = 0;
    for (int k = 0; k < 10; ++k)
    {
        auto r = c.omega_rng(k);
        auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 2);
        for (std::size_t i = 0; i < gs.size(); ++i)
        {
            auto const& g1 = gs[i];
            auto const& g2 = gs[(i + 1) % gs.size()];
            ConfigFunctional f = [&](const MarkedConfiguration& w) {
                return fs[i](w);
            };
            ConfigFunctional vf = [&](const MarkedConfiguration& w) {
                return unitary_rep(g2, cfg.model, f, w);
            };
            double nested = unitary_rep(g1, cfg.model, vf, omega);
            double direct = unitary_rep(compose(g1, g2), cfg.model, f, omega);
            group_law = std::max(group_law, std::abs(nested - direct));
            identity = std::max(
                identity,
                std::abs(unitary_rep(GroupElement::identity(c.dim()), cfg.model,
                                     f, omega)
                         - f(omega)));
        }
    }
    c.residual("V(g1) V(g2) F = V(g1 g2) F", group_law, 1e-8);
    c.residual("V(id) F = F", identity, 0);

    auto table = run_samples(
        c.n, 2 * gs.size(), c.spec("isometry"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto omega = sampler(r);
            for (std::size_t i = 0; i < gs.size(); ++i)
            {
                ConfigFunctional f = [&](const MarkedConfiguration& w) {
                    return fs[i](w);
                };
                double v = unitary_rep(gs[i], cfg.model, f, omega);
                double fv = fs[i](omega);
                out[2 * i] = v * v - fv * fv;
                out[2 * i + 1] = rn_config(gs[i], cfg.model, omega);
            }
        });
    auto est = table.estimates();
    for (std::size_t i = 0; i < gs.size(); ++i)
    {
        c.target("E(V(g) F)^2 - E F^2 fixture " + std::to_string(i),
                 est[2 * i], 0);
        c.target("E(V(g) 1)^2 fixture " + std::to_string(i), est[2 * i + 1], 1);
    }
    return c.finish();
}

ExperimentReport run_chaos_orth(const ExperimentConfig& cfg)
{
    Context c(cfg, "chaos_orth");
    auto rng = c.fixture_rng();
    // Wide supports: with narrow bumps the high chaos products are dominated
    // by rare configurations and the sample mean converges slowly
    auto broad = [&] {
        TestFunction::Term t;
        t.amp = uniform(rng, 0.5, 0.8) * (rng.uniform() < 0.5 ? -1 : 1);
        for (int a = 0; a < c.dim(); ++a)
        {
            double width = cfg.window.hi[a] - cfg.window.lo[a];
            double mid = cfg.window.lo[a] + 0.5 * width;
            t.x.push_back(Factor::plateau(
                mid + uniform(rng, -0.05, 0.05) * width,
                uniform(rng, 0.25, 0.3) * width, 0.15 * width));
        }
        t.s = Factor::bump(uniform(rng, 1.1, 1.3), uniform(rng, 1.0, 1.1));
        return TestFunction(c.dim(), {t});
    };
    auto phi = c.cfg.test_functions.empty() ? broad() : fixture_tf(c, rng, 0);
    auto psi = c.cfg.test_functions.empty() ? broad()
                                            : overlapping(rng, phi, c.dim());
    PoissonChaos cphi(phi, cfg.model);
    PoissonChaos cpsi(psi, cfg.model);
    double ip = inner_sigma(phi, psi, cfg.model);
    auto sampler = c.poisson();

    double rec = 0;
    for (int k = 0; k < 20; ++k)
    {
        auto r = c.omega_rng(k);
        auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 2);
        for (int n = 0; n <= 6; ++n)
        {
            rec = std::max(rec, rel_error(cphi.charlier(n, omega),
                                          cphi.charlier_recursion(n, omega)));
            rec = std::max(rec, rel_error(cpsi.charlier(n, omega),
                                          cpsi.charlier_recursion(n, omega)));
        }
    }
    c.residual("charlier vs recursion, n <= 6", rec, 1e-10);

    // Stratify on N = #points in the window: Q_n Q_m grows like N^{n+m}, so
    // plain sampling is dominated by rare counts and its standard error is
    // unreliable. Given N = k the points are iid and the products bounded.
    constexpr int kMax = 4;
    constexpr int kCols = (kMax + 1) * (kMax + 1) + 1;
    double mass = cfg.model.sigma_mass(cfg.window);
    int top = static_cast<int>(std::ceil(mass + 12 * std::sqrt(mass) + 20));
    std::vector<double> pk(top + 1);
    double alloc = 0;
    for (int k = 0; k <= top; ++k)
    {
        pk[k] = std::exp(-mass + k * std::log(mass) - std::lgamma(k + 1.0));
        alloc += pk[k] * std::pow(1.0 + k, kMax);
    }
    std::vector<McEstimate> est(kCols);
    std::vector<double> var(kCols, 0.0);
    for (int k = 0; k <= top; ++k)
    {
        auto nk = static_cast<std::size_t>(std::max(
            64.0, std::round(static_cast<double>(c.n) * pk[k] *
                             std::pow(1.0 + k, kMax) / alloc)));
        auto table = run_samples(
            nk, kCols, c.spec("products:" + std::to_string(k)), cfg.workers,
            [&](Rng& r, std::span<double> out) {
                std::vector<MarkedPoint> pts;
                for (int j = 0; j < k; ++j)
                    pts.push_back(cfg.model.sample_point(cfg.window, r));
                MarkedConfiguration omega(std::move(pts), c.dim());
                double qa[kMax + 1];
                double qb[kMax + 1];
                for (int n = 0; n <= kMax; ++n)
                {
                    qa[n] = cphi.charlier(n, omega);
                    qb[n] = cpsi.charlier(n, omega);
                }
                for (int n = 0; n <= kMax; ++n)
                    for (int m = 0; m <= kMax; ++m)
                        out[n * (kMax + 1) + m] = qa[n] * qb[m];
                out[kCols - 1] = cphi.exponential(omega);
            });
        auto part = table.estimates();
        for (int j = 0; j < kCols; ++j)
        {
            est[j].mean += pk[k] * part[j].mean;
            var[j] += pk[k] * pk[k] * part[j].std_error * part[j].std_error;
            est[j].n += part[j].n;
        }
    }
    for (int j = 0; j < kCols; ++j)
        est[j].std_error = std::sqrt(var[j]);
    for (int n = 0; n <= kMax; ++n)
    {
        for (int m = 0; m <= kMax; ++m)
        {
            double target = n == m ? std::tgamma(n + 1.0) * std::pow(ip, n) : 0;
            c.target("E[Q_" + std::to_string(n) + "(phi) Q_" + std::to_string(m)
                         + "(psi)]",
                     est[n * (kMax + 1) + m], target);
        }
    }
    c.target("E e(phi; .)", est.back(), 1);
    return c.finish();
}

ExperimentReport run_annihilation(const ExperimentConfig& cfg)
{
    Context c(cfg, "annihilation");
    auto rng = c.fixture_rng();
    int dim = c.dim();
    const Box& w = cfg.window;
    auto sampler = c.poisson();
    double worst = 0;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        // phi sits inside the support of psi, away from psi's kinks
        std::vector<Factor> px;
        std::vector<Factor> fx;
        for (int a = 0; a < dim; ++a)
        {
            double width = w.hi[a] - w.lo[a];
            double centre = uniform(rng, w.lo[a] + 0.4 * width,
                                    w.lo[a] + 0.6 * width);
            double big = uniform(rng, 0.3, 0.38) * width;
            px.push_back(Factor::bump(centre, big));
            fx.push_back(Factor::bump(centre + uniform(rng, -0.2, 0.2) * big,
                                      uniform(rng, 0.3, 0.5) * big));
        }
        auto psi = TestFunction::separable(uniform(rng, 0.4, 0.9), px,
                                           Factor::bump(0, 1.2), true);
        auto phi = TestFunction::separable(uniform(rng, -1, 1), fx,
                                           Factor::bump(uniform(rng, 0.9, 1.3),
                                                        0.3));
        PoissonChaos chaos(psi, cfg.model);
        double ip = inner_sigma(phi, psi, cfg.model);
        for (int k = 0; k < 20; ++k)
        {
            auto r = c.omega_rng(i * 20 + k);
            auto omega = enrich(sampler(r), cfg.model, cfg.window, r, 2);
            for (int n = 1; n <= 4; ++n)
            {
                ConfigFunctional qn = [&](const MarkedConfiguration& x) {
                    return chaos.charlier(n, x);
                };
                double lhs = mp_directional(phi, qn, cfg.model, omega);
                double rhs = n * ip * chaos.charlier(n - 1, omega);
                worst = std::max(worst, rel_error(lhs, rhs));
            }
        }
    }
    c.residual("grad^MP_phi Q_n(psi) = n (phi, psi) Q_{n-1}(psi), 20 w each",
               worst, 1e-6);
    return c.finish();
}

ExperimentReport run_number_op(const ExperimentConfig& cfg)
{
    Context c(cfg, "number_op");
    auto rng = c.fixture_rng();
    auto phi = fixture_tf(c, rng, 0);
    PoissonChaos chaos(phi, cfg.model);
    double norm2 = inner_sigma(phi, phi, cfg.model);
    auto sampler = c.poisson();
    for (int n = 1; n <= 3; ++n)
    {
        auto q = chaos.cylinder(n);
        auto est = second_quant_form(BaseOperator::identity, q, q, sampler,
                                     c.n, c.spec("n" + std::to_string(n)),
                                     cfg.workers);
        double target = n * std::tgamma(n + 1.0) * std::pow(norm2, n);
        c.target("E(grad^MP Q_" + std::to_string(n) + ", grad^MP Q_"
                     + std::to_string(n) + ")",
                 est, target);
    }
    auto one = CylinderFunction::constant(c.dim(), 1);
    auto zero = second_quant_form(BaseOperator::identity, one,
                                  chaos.cylinder(2), sampler, 100,
                                  c.spec("constant"), cfg.workers);
    c.residual("constant F gives zero form", std::abs(zero.mean), 0);
    return c.finish();
}

ExperimentReport run_second_quant(const ExperimentConfig& cfg)
{
    Context c(cfg, "second_quant");
    auto rng = c.fixture_rng();
    std::vector<SecondQuantForm> forms;
    std::vector<CylinderFunction> fs;
    std::vector<CylinderFunction> gs;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        fs.push_back(fixture_cylinder(c, rng, 2 * i, 2));
        gs.push_back(fixture_cylinder(c, rng, 2 * i + 1, 1));
        forms.emplace_back(BaseOperator::base_dirichlet, fs.back(), gs.back(),
                           cfg.model);
    }
    auto sampler = c.poisson();
    auto table = run_samples(c.n, 2 * forms.size(), c.spec("forms"),
                             cfg.workers, [&](Rng& r, std::span<double> out) {
                                 auto omega = sampler(r);
                                 for (std::size_t i = 0; i < forms.size(); ++i)
                                 {
                                     out[2 * i] = forms[i](omega);
                                     out[2 * i + 1] = dirichlet_integrand(
                                         fs[i], gs[i], omega);
                                 }
                             });
    auto est = table.estimates();
    for (std::size_t i = 0; i < forms.size(); ++i)
        c.target("E(grad^MP F, H grad^MP G) - E<grad F, grad G> fixture "
                     + std::to_string(i),
                 difference(est[2 * i], est[2 * i + 1]), 0);
    return c.finish();
}

//---------------------------------------------------------------------------//
// Solvable model fixtures

Box solvable_window() { return Box::cube(1, -8, 8); }

//! amp * p(x) e^{-x^2/4} * r(u) e^{-u^2/4}, u = log s
TestFunction gaussian_fixture(Rng& rng, double amp)
{
    TestFunction::Term t;
    t.amp = amp * (rng.uniform() < 0.5 ? -1 : 1);
    t.x.push_back(Factor::gauss_poly({1, uniform(rng, -0.5, 0.5)}, 0.25,
                                     uniform(rng, -0.5, 0.5)));
    t.s = Factor::gauss_poly({1, uniform(rng, -0.5, 0.5)}, 0.25,
                             uniform(rng, -0.3, 0.3));
    t.log_mark = true;
    return TestFunction(1, {t});
}

//! Finite Hermite expansion with n + m <= 3
TestFunction hermite_fixture(Rng& rng)
{
    std::vector<TestFunction::Term> terms;
    for (int n = 0; n <= 3; ++n)
    {
        for (int m = 0; n + m <= 3; ++m)
        {
            if (n + m == 0)
                continue;
            TestFunction::Term t;
            t.amp = uniform(rng, -0.08, 0.08);
            t.x.push_back(Factor::hermite(n));
            t.s = Factor::hermite(m);
            t.log_mark = true;
            terms.push_back(std::move(t));
        }
    }
    return TestFunction(1, std::move(terms));
}

MarkedConfiguration solvable_omega(const LevyModel& model, Rng& rng, int extra)
{
    auto w = solvable_window();
    return enrich(sample_poisson(model, w, rng), model, w, rng, extra);
}

ExperimentReport run_semigroup(const ExperimentConfig& cfg)
{
    Context c(cfg, "semigroup");
    SpectralBaseOperator op(1, 40, 40);
    auto const& model = op.model();
    auto rng = c.fixture_rng();

    // eigenfunctions He_n(x) He_m(log s)
    double eigen = 0;
    for (int n = 0; n <= 6; ++n)
    {
        for (int m = 0; n + m <= 6; ++m)
        {
            auto h = TestFunction::separable(1, {Factor::hermite(n)},
                                             Factor::hermite(m), true);
            for (double x : {-1.3, 0.4, 1.7})
            {
                for (double s : {0.5, 1.2, 2.6})
                {
                    MarkedPoint p{{x, 0, 0}, s};
                    double lhs = base_dirichlet_apply(model, h, p);
                    eigen = std::max(eigen, rel_error(lhs, (n + m) * h(p)));
                }
            }
        }
    }
    c.residual("H He_n He_m = (n + m) He_n He_m, n + m <= 6", eigen, 1e-8);

    std::vector<MarkedPoint> probes;
    for (double x : {-1.5, -0.2, 0.9, 2.1})
        for (double s : {0.4, 1.0, 2.3})
            probes.push_back({{x, 0, 0}, s});

    double tail = 0, parseval = 0, reproduce = 0, law = 0, conserve = 0,
           compose_err = 0, gen = 0, gen_empty = 0;
    std::vector<TestFunction> phis;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        auto phi = gaussian_fixture(rng, uniform(rng, 0.2, 0.5));
        phis.push_back(phi);
        auto co = op.coeffs(phi);
        tail = std::max(tail, co.tail_energy);
        double sum = 0;
        for (int n = 0; n <= co.nx; ++n)
            for (int m = 0; m <= co.nu; ++m)
                sum += co.at(n, m) * co.at(n, m) * std::tgamma(n + 1.0)
                       * std::tgamma(m + 1.0);
        parseval = std::max(parseval, std::abs(sum - co.norm2));

        auto h0 = heat_apply(op, 0, phi);
        auto h1 = heat_apply(op, 0.3, heat_apply(op, 0.5, phi));
        auto h2 = heat_apply(op, 0.8, phi);
        for (auto const& p : probes)
        {
            reproduce = std::max(reproduce, std::abs(h0(p) - phi(p)));
            law = std::max(law, std::abs(h1(p) - h2(p)));
        }

        LiftedSemigroup lifted(op, phi);
        for (double t : {0.5, 1.0, 2.0})
            conserve = std::max(conserve, std::abs(lifted.correction(t)));

        LiftedSemigroup second(op, lifted.heat(0.4));
        for (int k = 0; k < 5; ++k)
        {
            auto r = c.omega_rng(i * 5 + k);
            auto omega = solvable_omega(model, r, 2);
            double direct = lifted(1.0, omega);
            double stepped = second(0.6, omega) * std::exp(-lifted.correction(0.4));
            compose_err = std::max(compose_err, rel_error(stepped, direct));
            gen = std::max(gen, generator_residual(op, phi, omega));
        }
        gen_empty = std::max(gen_empty,
                             generator_residual(op, phi, MarkedConfiguration(std::vector<MarkedPoint>{}, 1)));
    }
    c.residual("spectral tail energy", tail, 1e-8);
    c.residual("Parseval", parseval, 1e-6);
    c.residual("e^{-0 H} phi = phi", reproduce, 1e-6);
    c.residual("e^{-0.3H} e^{-0.5H} = e^{-0.8H}", law, 1e-8);
    c.residual("|int (e^{-tH} - 1) phi dsigma~|", conserve, 1e-8);
    c.residual("lifted semigroup composition", compose_err, 1e-7);
    c.residual("generator residual, w empty", gen_empty, 1e-5);
    c.residual("generator residual", gen, 1e-4);

    // expectation is preserved by the lifted semigroup
    LiftedSemigroup lifted(op, phis.front());
    std::vector<double> times{0.5, 1.0, 2.0};
    std::vector<TestFunction> psi;
    std::vector<double> corr;
    for (double t : times)
    {
        psi.push_back(lifted.heat(t));
        corr.push_back(lifted.correction(t));
    }
    ConfigurationSampler sampler{model, solvable_window(), std::nullopt};
    auto table = run_samples(
        c.n, times.size(), c.spec("mean"), cfg.workers,
        [&](Rng& r, std::span<double> out) {
            auto omega = sampler(r);
            double f0 = LiftedSemigroup::apply(phis.front(), 0, omega);
            for (std::size_t k = 0; k < times.size(); ++k)
                out[k] = LiftedSemigroup::apply(psi[k], corr[k], omega) - f0;
        });
    auto est = table.estimates();
    for (std::size_t k = 0; k < times.size(); ++k)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "E T(%g)F - E F", times[k]);
        c.target(buf, est[k], 0);
    }
    return c.finish();
}

ExperimentReport run_exp_functional(const ExperimentConfig& cfg)
{
    Context c(cfg, "exp_functional");
    SpectralBaseOperator op(1);
    auto const& model = op.model();
    auto rng = c.fixture_rng();
    double worst = 0;
    for (int i = 0; i < cfg.fixtures; ++i)
    {
        auto phi = hermite_fixture(rng);
        auto co = op.coeffs(phi);
        for (int n = 0; n <= co.nx; ++n)
            for (int m = 0; m <= co.nu; ++m)
                co.at(n, m) *= n + m;
        auto h_phi = op.synthesize(co);
        CylinderFunction f({phi}, OuterFunction::exponential({1}));
        for (int k = 0; k < 20; ++k)
        {
            auto r = c.omega_rng(i * 20 + k);
            auto omega = solvable_omega(model, r, 3);
            double lhs = dirichlet_operator_apply(model, f, omega);
            double drift = pair(
                [&](const MarkedPoint& p) {
                    auto j = phi.jet(p);
                    return h_phi(p) - dot(j.grad, j.grad) - p.s * p.s * j.ds * j.ds;
                },
                omega);
            worst = std::max(worst, rel_error(lhs, drift * f(omega)));
        }
    }
    c.residual("H e^<phi,.> = <H phi - |grad phi|^2, .> e^<phi,.>", worst,
               1e-8);
    return c.finish();
}

//! Odd-in-x profile with a small mean, used at level 100
TestFunction ergodicity_fixture()
{
    constexpr double a = 0.238;
    constexpr double b = 0.006124;
    TestFunction::Term odd;
    odd.amp = a;
    odd.x.push_back(Factor::gauss_poly({0, 1}, 0.25, 0));
    TestFunction::Term mixed = odd;
    mixed.amp = 0.3 * a;
    mixed.s = Factor::gauss_poly({0, 1}, 0.25, 0);
    mixed.log_mark = true;
    TestFunction::Term even;
    even.amp = b;
    even.x.push_back(Factor::gauss_poly({1}, 0.25, 0));
    return TestFunction(1, {odd, mixed, even});
}

ExperimentReport run_ergodicity(const ExperimentConfig& cfg)
{
    Context c(cfg, "ergodicity");
    SpectralBaseOperator op(100);
    auto phi = ergodicity_fixture();
    std::vector<double> times{0, 1, 2, 5};
    ConfigurationSampler pure{op.model(), solvable_window(), std::nullopt};
    ConfigurationSampler mixed{op.model(), solvable_window(), cfg.mixture};
    auto a = ergodicity_probe(op, phi, times, pure, c.n, c.spec("poisson"),
                              cfg.workers);
    auto b = ergodicity_probe(op, phi, times, mixed, c.n, c.spec("mixed"),
                              cfg.workers);
    for (std::size_t k = 0; k < times.size(); ++k)
    {
        char buf[96];
        std::snprintf(buf, sizeof buf, "t = %g: Var poisson %.6g, Var mixed %.6g",
                      times[k], a.variance[k], b.variance[k]);
        c.report.notes.push_back(buf);
    }
    double ratio = a.variance.back() / a.variance.front();
    c.residual("poisson Var(T(5)F) / Var(F)", ratio, 0.01);
    c.report.add_lower_bound("mixed Var(T(5)F) / poisson Var(T(5)F)",
                             b.variance.back() / a.variance.back(), 10);

    auto zero = ergodicity_probe(op, TestFunction::zero(1), times, pure, 100,
                                 c.spec("zero"), cfg.workers);
    double zv = *std::max_element(zero.variance.begin(), zero.variance.end());
    c.residual("phi = 0 gives zero variance", zv, 0);
    return c.finish();
}

//---------------------------------------------------------------------------//
double stratum_probability(const MixingLaw& nu, double mass, int n)
{
    double p = 0;
    for (auto const& a : nu.atoms())
    {
        double lam = a.z * mass;
        if (lam == 0)
            p += a.w * (n == 0 ? 1.0 : 0.0);
        else
            p += a.w * std::exp(-lam + n * std::log(lam) - std::lgamma(n + 1.0));
    }
    return p;
}

void kernel_strata(Context& c, const CylinderFunction& f, const MixingLaw& nu,
                   const std::string& tag)
{
    auto const& cfg = c.cfg;
    constexpr int kStrata = 4;
    ConfigurationSampler sampler{cfg.model, cfg.window, nu};
    double mass = cfg.model.sigma_mass(cfg.window);
    auto outer = run_samples(c.n, kStrata, c.spec(tag + ":outer"), cfg.workers,
                             [&](Rng& r, std::span<double> out) {
                                 auto omega = sampler(r);
                                 double v = f(omega);
                                 for (int n = 0; n < kStrata; ++n)
                                     out[n] = omega.size() == std::size_t(n) ? v : 0;
                             });
    auto lhs = outer.estimates();
    std::size_t inner_n = cfg.inner_samples;
    for (int n = 0; n < kStrata; ++n)
    {
        double pn = stratum_probability(nu, mass, n);
        McEstimate inner;
        if (n == 0)
        {
            inner.mean = f(MarkedConfiguration(std::vector<MarkedPoint>{}, cfg.model.dim()));
            inner.n = 1;
        }
        else
        {
            inner = estimate(
                [&](Rng& r) {
                    std::vector<MarkedPoint> pts;
                    for (int k = 0; k < n; ++k)
                        pts.push_back(cfg.model.sample_point(cfg.window, r));
                    return MarkedConfiguration(std::move(pts), cfg.model.dim());
                },
                [&](const MarkedConfiguration& w) { return f(w); }, inner_n,
                c.spec(tag + ":inner" + std::to_string(n)), cfg.workers);
        }
        McEstimate rhs;
        rhs.mean = pn * inner.mean;
        rhs.std_error = pn * inner.std_error;
        rhs.n = inner.n;
        c.target(tag + " E[F 1{N=" + std::to_string(n) + "}] - P(N="
                     + std::to_string(n) + ") kernel integral",
                 difference(lhs[n], rhs), 0);
        if (n == 0)
        {
            // on {N = 0} the conditional expectation is F(empty) itself
            double gap = 0;
            for (int k = 0; k < 20; ++k)
            {
                auto r = c.omega_rng(k);
                auto omega = sampler(r);
                if (omega.empty())
                    gap = std::max(gap, std::abs(f(omega) - inner.mean));
            }
            c.residual(tag + " stratum 0 equals F(empty)", gap, 0);
        }
    }
}

ExperimentReport run_kernel_impl(const ExperimentConfig& cfg)
{
    Context c(cfg, "kernel");
    auto rng = c.fixture_rng();
    auto f = fixture_cylinder(c, rng, 0, 2);
    kernel_strata(c, f, cfg.mixture, "mixed");
    kernel_strata(c, f, MixingLaw::dirac(1), "poisson");
    return c.finish();
}

std::string fmt(double v)
{
    if (!std::isfinite(v))
        return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json number(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    return v;
}

std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s)
    {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

//---------------------------------------------------------------------------//
const std::vector<ExperimentInfo>& registry()
{
    static const std::vector<ExperimentInfo> list{
        {"laplace", "Laplace transform of the marked Poisson measure",
         run_laplace},
        {"quasiinv", "Quasiinvariance of the marked Poisson measure under the group",
         run_quasiinv},
        {"image_measure", "Image of the marked Poisson measure under the group",
         run_image_measure},
        {"compound", "Density of the transformed compound Poisson measure",
         run_compound},
        {"base_ibp", "Integration by parts on X x R+", run_base_ibp},
        {"ibp", "Integration by parts on the marked configuration space",
         run_ibp},
        {"ibp_mixed", "Integration by parts under a mixed Poisson measure",
         run_ibp_mixed},
        {"divergence", "Divergence of cylinder vector fields", run_divergence},
        {"dirichlet", "Intrinsic Dirichlet operator and form", run_dirichlet},
        {"derivative", "Directional derivatives along flows and currents",
         run_derivative},
        {"lie", "Lie bracket and commutators of the representation generators",
         run_lie},
        {"unitary", "Unitary representation of the group", run_unitary},
        {"chaos_orth", "Orthogonality of Charlier chaos", run_chaos_orth},
        {"annihilation", "Marked Poisson gradient as annihilation operator",
         run_annihilation},
        {"number_op", "Second quantization of the identity (number operator)",
         run_number_op},
        {"second_quant",
         "Second quantization of the base operator equals the Dirichlet operator",
         run_second_quant},
        {"semigroup", "Heat semigroup on Poisson exponentials", run_semigroup},
        {"exp_functional", "Dirichlet operator on exponential functionals",
         run_exp_functional},
        {"ergodicity", "Ergodicity of the heat semigroup for mixed measures",
         run_ergodicity},
        {"kernel", "Conditional expectations given the exterior configuration",
         run_kernel_impl},
    };
    return list;
}

const ExperimentInfo* find_experiment(const std::string& name)
{
    for (auto const& e : registry())
        if (e.name == name)
            return &e;
    return nullptr;
}

ExperimentReport run_experiment(const std::string& name,
                                const ExperimentConfig& config)
{
    auto const* info = find_experiment(name);
    if (!info)
        throw Error(ErrorKind::config, "unknown experiment '" + name + "'");
    auto report = info->run(config);
    report.anchor = info->anchor;
    return report;
}

ExperimentReport kernel_check(const ExperimentConfig& config)
{
    return run_experiment("kernel", config);
}

SuiteReport run_suite(const ExperimentConfig& config)
{
    SuiteReport suite;
    suite.config_hash = config_hash(config.raw);
    suite.seed = config.seed;
    std::vector<std::string> names = config.experiments;
    if (names.empty() && !config.raw.contains("experiments"))
        for (auto const& e : registry())
            names.push_back(e.name);
    for (auto const& name : names)
    {
        suite.experiments.push_back(run_experiment(name, config));
        suite.verdict = suite.verdict && suite.experiments.back().verdict;
    }
    return suite;
}

//---------------------------------------------------------------------------//
json to_json(const ExperimentReport& r)
{
    json j;
    j["name"] = r.name;
    j["anchor"] = r.anchor;
    j["estimates"] = json::array();
    for (auto const& e : r.estimates)
    {
        json je;
        je["label"] = e.label;
        je["mean"] = number(e.est.mean);
        je["stderr"] = number(e.est.std_error);
        je["target"] = e.est.target ? number(*e.est.target) : json(nullptr);
        je["z"] = e.est.z ? number(*e.est.z) : json(nullptr);
        je["n"] = e.est.n;
        je["skipped"] = e.est.skipped;
        je["pass"] = e.est.pass;
        j["estimates"].push_back(je);
    }
    j["residuals"] = json::array();
    for (auto const& res : r.residuals)
    {
        json jr;
        jr["label"] = res.label;
        jr["value"] = number(res.value);
        jr["tolerance"] = number(res.tolerance);
        jr["bound"] = res.lower_bound ? "min" : "max";
        jr["pass"] = res.pass;
        j["residuals"].push_back(jr);
    }
    if (!r.notes.empty())
        j["notes"] = r.notes;
    j["verdict"] = r.verdict ? "pass" : "fail";
    return j;
}

json to_json(const SuiteReport& report)
{
    json j;
    j["suite_version"] = report.suite_version;
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    j["experiments"] = json::array();
    for (auto const& e : report.experiments)
        j["experiments"].push_back(to_json(e));
    j["verdict"] = report.verdict ? "pass" : "fail";
    return j;
}

std::string to_csv(const SuiteReport& report)
{
    std::ostringstream os;
    os << "experiment,kind,label,value,stderr,target,z,tolerance,pass\n";
    for (auto const& e : report.experiments)
    {
        for (auto const& est : e.estimates)
        {
            os << e.name << ",estimate," << csv_quote(est.label) << ','
               << fmt(est.est.mean) << ',' << fmt(est.est.std_error) << ','
               << (est.est.target ? fmt(*est.est.target) : "") << ','
               << (est.est.z ? fmt(*est.est.z) : "") << ",,"
               << (est.est.pass ? "true" : "false") << '\n';
        }
        for (auto const& r : e.residuals)
        {
            os << e.name << (r.lower_bound ? ",lower_bound," : ",residual,")
               << csv_quote(r.label) << ',' << fmt(r.value) << ",,,,"
               << fmt(r.tolerance) << ',' << (r.pass ? "true" : "false")
               << '\n';
        }
    }
    return os.str();
}

}  // namespace mpcs
