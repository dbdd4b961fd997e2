// SPDX-License-Identifier: Apache-2.0
#include "mpcs/calculus.hpp"

#include <algorithm>
#include <cmath>

namespace mpcs
{

namespace
{
void check_arity(std::span<const double> r, int arity)
{
    if (static_cast<int>(r.size()) != arity)
        throw Error(ErrorKind::evaluation, "outer function arity mismatch");
}

double weighted_sum(const std::vector<double>& c, std::span<const double> r)
{
    double t = 0;
    for (std::size_t j = 0; j < c.size(); ++j)
        t += c[j] * r[j];
    return t;
}
}  // namespace

OuterFunction::OuterFunction(int arity, Evaluator eval, Growth growth,
                             bool is_constant, ValueEvaluator value)
    : arity_(arity), eval_(std::move(eval)), value_(std::move(value)),
      growth_(growth), constant_(is_constant)
{
    if (arity_ < 1)
        throw Error(ErrorKind::evaluation, "outer function needs arity >= 1");
}

OuterJet OuterFunction::jet(std::span<const double> r) const
{
    check_arity(r, arity_);
    auto j = eval_(r);
    if (!std::isfinite(j.value))
        throw Error(ErrorKind::evaluation, "non-finite outer function value");
    return j;
}

double OuterFunction::operator()(std::span<const double> r) const
{
    if (!value_)
        return jet(r).value;
    check_arity(r, arity_);
    double v = value_(r);
    if (!std::isfinite(v))
        throw Error(ErrorKind::evaluation, "non-finite outer function value");
    return v;
}

OuterFunction OuterFunction::constant(int arity, double c)
{
    return OuterFunction(
        arity,
        [arity, c](std::span<const double>) {
            OuterJet j;
            j.value = c;
            j.grad.assign(arity, 0.0);
            j.hess.assign(arity * arity, 0.0);
            return j;
        },
        Growth::bounded, true, [c](std::span<const double>) { return c; });
}

OuterFunction OuterFunction::linear(std::vector<double> c, double c0)
{
    int n = static_cast<int>(c.size());
    return OuterFunction(
        n,
        [n, c, c0](std::span<const double> r) {
            OuterJet j;
            j.value = c0 + weighted_sum(c, r);
            j.grad = c;
            j.hess.assign(n * n, 0.0);
            return j;
        },
        Growth::polynomial, false,
        [c, c0](std::span<const double> r) { return c0 + weighted_sum(c, r); });
}

OuterFunction OuterFunction::quadratic(std::vector<double> a,
                                       std::vector<double> b, double c)
{
    int n = static_cast<int>(b.size());
    if (static_cast<int>(a.size()) != n * n)
        throw Error(ErrorKind::evaluation, "quadratic: A must be N x N");
    return OuterFunction(
        n,
        [n, a, b, c](std::span<const double> r) {
            OuterJet j;
            j.value = c + weighted_sum(b, r);
            j.grad = b;
            for (int p = 0; p < n; ++p)
            {
                for (int q = 0; q < n; ++q)
                {
                    j.value += 0.5 * a[p * n + q] * r[p] * r[q];
                    j.grad[p] += 0.5 * (a[p * n + q] + a[q * n + p]) * r[q];
                }
            }
            j.hess.resize(n * n);
            for (int p = 0; p < n; ++p)
                for (int q = 0; q < n; ++q)
                    j.hess[p * n + q] = 0.5 * (a[p * n + q] + a[q * n + p]);
            return j;
        },
        Growth::polynomial);
}

OuterFunction OuterFunction::exponential(std::vector<double> c)
{
    int n = static_cast<int>(c.size());
    return OuterFunction(
        n,
        [n, c](std::span<const double> r) {
            OuterJet j;
            j.value = std::exp(weighted_sum(c, r));
            j.grad.resize(n);
            j.hess.resize(n * n);
            for (int p = 0; p < n; ++p)
            {
                j.grad[p] = c[p] * j.value;
                for (int q = 0; q < n; ++q)
                    j.hess[p * n + q] = c[p] * c[q] * j.value;
            }
            return j;
        },
        Growth::polynomial, false,
        [c](std::span<const double> r) { return std::exp(weighted_sum(c, r)); });
}

OuterFunction OuterFunction::sine(std::vector<double> c, double phase)
{
    int n = static_cast<int>(c.size());
    return OuterFunction(
        n,
        [n, c, phase](std::span<const double> r) {
            double arg = weighted_sum(c, r) + phase;
            double sn = std::sin(arg);
            double cs = std::cos(arg);
            OuterJet j;
            j.value = sn;
            j.grad.resize(n);
            j.hess.resize(n * n);
            for (int p = 0; p < n; ++p)
            {
                j.grad[p] = c[p] * cs;
                for (int q = 0; q < n; ++q)
                    j.hess[p * n + q] = -c[p] * c[q] * sn;
            }
            return j;
        },
        Growth::bounded, false, [c, phase](std::span<const double> r) {
            return std::sin(weighted_sum(c, r) + phase);
        });
}

OuterFunction OuterFunction::gaussian(std::vector<double> c)
{
    int n = static_cast<int>(c.size());
    return OuterFunction(
        n,
        [n, c](std::span<const double> r) {
            double e = 0;
            for (int p = 0; p < n; ++p)
                e += c[p] * r[p] * r[p];
            OuterJet j;
            j.value = std::exp(-0.5 * e);
            j.grad.resize(n);
            j.hess.resize(n * n);
            for (int p = 0; p < n; ++p)
                j.grad[p] = -c[p] * r[p] * j.value;
            for (int p = 0; p < n; ++p)
            {
                for (int q = 0; q < n; ++q)
                {
                    j.hess[p * n + q] = c[p] * r[p] * c[q] * r[q] * j.value;
                    if (p == q)
                        j.hess[p * n + q] -= c[p] * j.value;
                }
            }
            return j;
        },
        Growth::bounded, false, [n, c](std::span<const double> r) {
            double e = 0;
            for (int p = 0; p < n; ++p)
                e += c[p] * r[p] * r[p];
            return std::exp(-0.5 * e);
        });
}

OuterFunction OuterFunction::product(const OuterFunction& f,
                                     const OuterFunction& g)
{
    int nf = f.arity();
    int ng = g.arity();
    int n = nf + ng;
    auto growth = (f.bounded() && g.bounded()) ? Growth::bounded
                                               : Growth::polynomial;
    return OuterFunction(
        n,
        [f, g, nf, ng, n](std::span<const double> r) {
            auto jf = f.jet(r.subspan(0, nf));
            auto jg = g.jet(r.subspan(nf, ng));
            OuterJet j;
            j.value = jf.value * jg.value;
            j.grad.resize(n);
            j.hess.assign(n * n, 0.0);
            for (int p = 0; p < nf; ++p)
                j.grad[p] = jf.grad[p] * jg.value;
            for (int p = 0; p < ng; ++p)
                j.grad[nf + p] = jf.value * jg.grad[p];
            for (int p = 0; p < nf; ++p)
                for (int q = 0; q < nf; ++q)
                    j.hess[p * n + q] = jf.hess[p * nf + q] * jg.value;
            for (int p = 0; p < ng; ++p)
                for (int q = 0; q < ng; ++q)
                    j.hess[(nf + p) * n + nf + q] = jf.value * jg.hess[p * ng + q];
            for (int p = 0; p < nf; ++p)
            {
                for (int q = 0; q < ng; ++q)
                {
                    double m = jf.grad[p] * jg.grad[q];
                    j.hess[p * n + nf + q] = m;
                    j.hess[(nf + q) * n + p] = m;
                }
            }
            return j;
        },
        growth, f.is_constant() && g.is_constant(),
        [f, g, nf, ng](std::span<const double> r) {
            return f(r.subspan(0, nf)) * g(r.subspan(nf, ng));
        });
}

//---------------------------------------------------------------------------//
CylinderFunction::CylinderFunction()
    : CylinderFunction({TestFunction::zero(1)}, OuterFunction::constant(1, 0))
{
}

CylinderFunction::CylinderFunction(std::vector<TestFunction> phis,
                                   OuterFunction outer)
    : phis_(std::move(phis)), outer_(std::move(outer))
{
    if (phis_.empty())
        throw Error(ErrorKind::evaluation,
                    "cylinder function needs at least one test function");
    if (static_cast<int>(phis_.size()) != outer_.arity())
        throw Error(ErrorKind::evaluation,
                    "outer arity differs from number of test functions");
}

CylinderFunction CylinderFunction::constant(int dim, double c)
{
    return CylinderFunction({TestFunction::zero(dim)},
                            OuterFunction::constant(1, c));
}

CylinderFunction CylinderFunction::linear(const TestFunction& phi)
{
    return CylinderFunction({phi}, OuterFunction::linear({1.0}));
}

std::vector<double>
CylinderFunction::pairings(const MarkedConfiguration& omega) const
{
    std::vector<double> r(phis_.size());
    for (std::size_t j = 0; j < phis_.size(); ++j)
        r[j] = pair(phis_[j], omega);
    return r;
}

double CylinderFunction::operator()(const MarkedConfiguration& omega) const
{
    if (is_constant())
    {
        std::vector<double> r(phis_.size(), 0.0);
        return outer_(r);
    }
    return outer_(pairings(omega));
}

CylinderFunction product(const CylinderFunction& f, const CylinderFunction& g)
{
    auto phis = f.phis();
    phis.insert(phis.end(), g.phis().begin(), g.phis().end());
    return CylinderFunction(std::move(phis),
                            OuterFunction::product(f.outer(), g.outer()));
}

double eval(const CylinderFunction& f, const MarkedConfiguration& omega)
{
    return f(omega);
}

//---------------------------------------------------------------------------//
double tangent_inner(const TangentVector& a, const TangentVector& b)
{
    if (a.size() != b.size())
        throw Error(ErrorKind::tangent, "tangent vectors at different points");
    std::vector<double> terms(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        if (a.at[i].x != b.at[i].x || a.at[i].s != b.at[i].s)
            throw Error(ErrorKind::tangent,
                        "tangent vectors at different points");
        terms[i] = dot(a.u[i], b.u[i]) + a.r[i] * b.r[i];
    }
    return pairwise_sum(terms);
}

TangentVector lift(const LieElement& xi, const MarkedConfiguration& omega)
{
    TangentVector t;
    t.at = omega.points();
    t.u.reserve(omega.size());
    t.r.reserve(omega.size());
    for (auto const& p : omega)
    {
        auto j = xi.jet(p.x);
        t.u.push_back(j.v);
        t.r.push_back(j.a);
    }
    return t;
}

TangentVector field_at(const CylinderField& field,
                       const MarkedConfiguration& omega)
{
    TangentVector t;
    t.at = omega.points();
    t.u.assign(omega.size(), Vec{0, 0, 0});
    t.r.assign(omega.size(), 0.0);
    for (auto const& term : field)
    {
        double g = term.g(omega);
        auto l = lift(term.xi, omega);
        for (std::size_t i = 0; i < omega.size(); ++i)
        {
            t.u[i] = t.u[i] + g * l.u[i];
            t.r[i] += g * l.r[i];
        }
    }
    return t;
}

//---------------------------------------------------------------------------//
double dir_derivative(const LieElement& xi, const CylinderFunction& f,
                      const MarkedConfiguration& omega)
{
    if (f.is_constant() || omega.empty())
        return 0;
    auto outer = f.outer().jet(f.pairings(omega));
    double total = 0;
    for (std::size_t j = 0; j < f.phis().size(); ++j)
    {
        if (outer.grad[j] == 0)
            continue;
        auto const& phi = f.phis()[j];
        double d = 0;
        for (auto const& p : omega)
            d += directional_derivative_base(xi, phi, p);
        total += outer.grad[j] * d;
    }
    return total;
}

TangentVector gradient(const CylinderFunction& f,
                       const MarkedConfiguration& omega)
{
    TangentVector t;
    t.at = omega.points();
    t.u.assign(omega.size(), Vec{0, 0, 0});
    t.r.assign(omega.size(), 0.0);
    if (f.is_constant() || omega.empty())
        return t;
    auto outer = f.outer().jet(f.pairings(omega));
    for (std::size_t j = 0; j < f.phis().size(); ++j)
    {
        double c = outer.grad[j];
        if (c == 0)
            continue;
        for (std::size_t i = 0; i < omega.size(); ++i)
        {
            auto const& p = omega[i];
            auto pj = f.phis()[j].jet(p);
            t.u[i] = t.u[i] + c * pj.grad;
            t.r[i] += c * p.s * pj.ds;
        }
    }
    return t;
}

double log_derivative_B(const LieElement& xi, const LevyModel& model,
                        const MarkedConfiguration& omega)
{
    double total = 0;
    for (auto const& p : omega)
        total += beta_point(xi, model, p);
    return total;
}

double divergence_cyl(const CylinderField& field, const LevyModel& model,
                      const MarkedConfiguration& omega)
{
    double total = 0;
    for (auto const& term : field)
    {
        total += dir_derivative(term.xi, term.g, omega);
        double g = term.g(omega);
        if (g != 0)
            total += log_derivative_B(term.xi, model, omega) * g;
    }
    return total;
}

double dirichlet_integrand(const CylinderFunction& f, const CylinderFunction& g,
                           const MarkedConfiguration& omega)
{
    return tangent_inner(gradient(f, omega), gradient(g, omega));
}

double base_dirichlet_apply(const LevyModel& model, const TestJet& j,
                            const MarkedPoint& p)
{
    if (j.grad == Vec{0, 0, 0} && j.lap == 0 && j.ds == 0 && j.dss == 0)
        return 0;
    auto ld = model.log_derivatives(p);
    double s = p.s;
    return -j.lap - dot(ld.grad_x, j.grad) - s * s * j.dss - 2 * s * j.ds
           - ld.s_ds * s * j.ds;
}

double base_dirichlet_apply(const LevyModel& model, const TestFunction& phi,
                            const MarkedPoint& p)
{
    return base_dirichlet_apply(model, phi.jet(p), p);
}

double dirichlet_operator_apply(const LevyModel& model,
                                const CylinderFunction& f,
                                const MarkedConfiguration& omega)
{
    if (f.is_constant() || omega.empty())
        return 0;
    auto outer = f.outer().jet(f.pairings(omega));
    std::size_t n = f.phis().size();
    std::vector<double> h_pair(n, 0.0);
    std::vector<double> g_pair(n * n, 0.0);
    std::vector<TestJet> jets(n);
    for (auto const& p : omega)
    {
        for (std::size_t j = 0; j < n; ++j)
        {
            jets[j] = f.phis()[j].jet(p);
            h_pair[j] += base_dirichlet_apply(model, jets[j], p);
        }
        for (std::size_t j = 0; j < n; ++j)
        {
            for (std::size_t k = 0; k < n; ++k)
            {
                g_pair[j * n + k] += dot(jets[j].grad, jets[k].grad)
                                     + p.s * jets[j].ds * p.s * jets[k].ds;
            }
        }
    }
    double total = 0;
    for (std::size_t j = 0; j < n; ++j)
    {
        total += outer.grad[j] * h_pair[j];
        for (std::size_t k = 0; k < n; ++k)
            total -= outer.hess[j * n + k] * g_pair[j * n + k];
    }
    return total;
}

//---------------------------------------------------------------------------//
namespace
{
constexpr double kBracketStep = 1e-5;

class BracketElement final : public LieElementImpl
{
  public:
    BracketElement(LieElement xi1, LieElement xi2, int dim)
        : xi1_(std::move(xi1)), xi2_(std::move(xi2)), dim_(dim)
    {
        support_ = xi1_.support().intersect(xi2_.support());
        speed_ = estimate_speed();
    }

    LieJet jet(const Vec& x) const override
    {
        LieJet j;
        if (!support_.contains(x))
            return j;
        base(x, j.v, j.a);
        for (int k = 0; k < dim_; ++k)
        {
            Vec xp = x;
            Vec xm = x;
            xp[k] += kBracketStep;
            xm[k] -= kBracketStep;
            Vec vp, vm;
            double ap, am;
            base(xp, vp, ap);
            base(xm, vm, am);
            for (int i = 0; i < dim_; ++i)
                j.dv[i][k] = (vp[i] - vm[i]) / (2 * kBracketStep);
            j.grad_a[k] = (ap - am) / (2 * kBracketStep);
        }
        j.div = trace(j.dv);
        return j;
    }

    Vec velocity(const Vec& x) const override
    {
        Vec v{0, 0, 0};
        double a = 0;
        if (support_.contains(x))
            base(x, v, a);
        return v;
    }

    double current_exponent(const Vec& x) const override
    {
        Vec v{0, 0, 0};
        double a = 0;
        if (support_.contains(x))
            base(x, v, a);
        return a;
    }

    Box support() const override { return support_; }
    double speed_bound() const override { return speed_; }

    std::vector<double> breakpoints(int axis) const override
    {
        auto b = xi1_.breakpoints(axis);
        auto b2 = xi2_.breakpoints(axis);
        b.insert(b.end(), b2.begin(), b2.end());
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

  private:
    void base(const Vec& x, Vec& v, double& a) const
    {
        auto j1 = xi1_.jet(x);
        auto j2 = xi2_.jet(x);
        v = j2.dv * j1.v - j1.dv * j2.v;
        a = dot(j2.grad_a, j1.v) - dot(j1.grad_a, j2.v);
    }

    double estimate_speed() const
    {
        if (support_.empty())
            return 0;
        constexpr int kGrid = 41;
        int total = 1;
        for (int k = 0; k < dim_; ++k)
            total *= kGrid;
        double best = 0;
        for (int idx = 0; idx < total; ++idx)
        {
            Vec x{0, 0, 0};
            int rest = idx;
            for (int k = 0; k < dim_; ++k)
            {
                int i = rest % kGrid;
                rest /= kGrid;
                x[k] = support_.lo[k]
                       + (support_.hi[k] - support_.lo[k]) * i / (kGrid - 1);
            }
            best = std::max(best, norm(velocity(x)));
        }
        // Grid maximum with a safety factor
        return 1.5 * best;
    }

    LieElement xi1_;
    LieElement xi2_;
    int dim_;
    Box support_;
    double speed_ = 0;
};
}  // namespace

LieElement lie_bracket(const LieElement& xi1, const LieElement& xi2)
{
    return LieElement(std::make_shared<BracketElement>(xi1, xi2, xi1.dim()),
                      xi1.dim());
}

double symmetric_derivative(const LieElement& xi, const LevyModel& model,
                            const CylinderFunction& f,
                            const MarkedConfiguration& omega)
{
    double d = dir_derivative(xi, f, omega);
    double v = f(omega);
    if (v != 0)
        d += 0.5 * log_derivative_B(xi, model, omega) * v;
    return d;
}

ComplexPair generator_R(const LieElement& xi, const LevyModel& model,
                        const CylinderFunction& f,
                        const MarkedConfiguration& omega)
{
    // (1/i) x = -i x
    return {0.0, -symmetric_derivative(xi, model, f, omega)};
}

//---------------------------------------------------------------------------//
namespace
{
template<class Eval>
double central_difference(Eval&& at, const FlowDifference& opts)
{
    double h = opts.h;
    double d1 = (at(h) - at(-h)) / (2 * h);
    if (!opts.richardson)
        return d1;
    double d2 = (at(h / 2) - at(-h / 2)) / h;
    return (4 * d2 - d1) / 3;
}
}  // namespace

double flow_derivative(const LieElement& xi, const ConfigFunctional& h,
                       const MarkedConfiguration& omega,
                       const FlowDifference& opts)
{
    return central_difference(
        [&](double t) {
            auto g = GroupElement::from_lie(xi, t, opts.flow);
            return h(act_config(g, omega));
        },
        opts);
}

double flow_derivative(const LieElement& xi,
                       const std::function<double(const MarkedPoint&)>& f,
                       const MarkedPoint& p, const FlowDifference& opts)
{
    return central_difference(
        [&](double t) {
            auto g = GroupElement::from_lie(xi, t, opts.flow);
            return f(act_point(g, p));
        },
        opts);
}

double bracket_residual(const LieElement& xi1, const LieElement& xi2,
                        const TestFunction& phi, const MarkedPoint& p,
                        const FlowDifference& opts)
{
    auto d2 = [&](const MarkedPoint& q) {
        return directional_derivative_base(xi2, phi, q);
    };
    auto d1 = [&](const MarkedPoint& q) {
        return directional_derivative_base(xi1, phi, q);
    };
    double nested = flow_derivative(xi1, d2, p, opts)
                    - flow_derivative(xi2, d1, p, opts);
    double direct = directional_derivative_base(lie_bracket(xi1, xi2), phi, p);
    return std::abs(direct - nested);
}

double commutator_residual(const LieElement& xi1, const LieElement& xi2,
                           const LevyModel& model, const CylinderFunction& f,
                           const MarkedConfiguration& omega,
                           const FlowDifference& opts)
{
    auto d_of = [&](const LieElement& xi) {
        return [&model, &f, xi](const MarkedConfiguration& w) {
            return symmetric_derivative(xi, model, f, w);
        };
    };
    auto h1 = d_of(xi1);
    auto h2 = d_of(xi2);
    auto nested = [&](const LieElement& outer, const ConfigFunctional& inner) {
        double v = inner(omega);
        double d = flow_derivative(outer, inner, omega, opts);
        return d + 0.5 * log_derivative_B(outer, model, omega) * v;
    };
    double lhs = nested(xi1, h2) - nested(xi2, h1);
    double rhs = symmetric_derivative(lie_bracket(xi1, xi2), model, f, omega);
    return std::abs(lhs - rhs);
}

//---------------------------------------------------------------------------//
MarkedConfiguration ConfigurationSampler::operator()(Rng& rng) const
{
    if (mixing)
        return sample_mixed(model, *mixing, window, rng).second;
    return sample_poisson(model, window, rng);
}

namespace
{
bool is_zero_element(const LieElement& xi)
{
    auto const* v = xi.v_fields();
    auto const* a = xi.a_field();
    if (!v || !a)
        return false;
    for (auto const& f : *v)
    {
        if (!f.is_zero())
            return false;
    }
    return a->is_zero();
}
}  // namespace

McEstimate ibp_residual(const CylinderFunction& f, const CylinderFunction& g,
                        const LieElement& xi,
                        const ConfigurationSampler& sampler, std::size_t n,
                        RngSpec spec, int workers)
{
    if (!f.outer().bounded() || !g.outer().bounded())
        throw Error(ErrorKind::evaluation,
                    "integration by parts needs bounded cylinder functions");
    if (is_zero_element(xi) || (f.is_constant() && g.is_constant()))
    {
        McEstimate zero;
        zero.n = n;
        return with_target(zero, 0.0);
    }
    auto residual = [&](const MarkedConfiguration& w) {
        double fv = f(w);
        double gv = g(w);
        return dir_derivative(xi, f, w) * gv + fv * dir_derivative(xi, g, w)
               + fv * gv * log_derivative_B(xi, sampler.model, w);
    };
    return with_target(estimate(sampler, residual, n, spec, workers), 0.0);
}

}  // namespace mpcs
