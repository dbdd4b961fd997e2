// SPDX-License-Identifier: Apache-2.0
#include "mpcs/chaos_fock.hpp"

#include <algorithm>
#include <cmath>

namespace mpcs
{

TruncatedSeries::TruncatedSeries(int order) : c_(std::max(order, 0) + 1, 0.0)
{
}

TruncatedSeries::TruncatedSeries(std::vector<double> coeffs)
    : c_(std::move(coeffs))
{
    if (c_.empty())
        c_.push_back(0);
}

TruncatedSeries TruncatedSeries::constant(int order, double c)
{
    TruncatedSeries s(order);
    s.c_[0] = c;
    return s;
}

TruncatedSeries TruncatedSeries::variable(int order)
{
    TruncatedSeries s(order);
    if (order >= 1)
        s.c_[1] = 1;
    return s;
}

double TruncatedSeries::evaluate(double t) const
{
    double r = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it)
        r = r * t + *it;
    return r;
}

TruncatedSeries& TruncatedSeries::operator+=(const TruncatedSeries& o)
{
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t k = 0; k < c_.size(); ++k)
        c_[k] += o.c_[k];
    return *this;
}

TruncatedSeries& TruncatedSeries::operator-=(const TruncatedSeries& o)
{
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t k = 0; k < c_.size(); ++k)
        c_[k] -= o.c_[k];
    return *this;
}

TruncatedSeries& TruncatedSeries::operator*=(double a)
{
    for (auto& c : c_)
        c *= a;
    return *this;
}

TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b)
{
    return a += b;
}

TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b)
{
    return a -= b;
}

TruncatedSeries operator*(double a, TruncatedSeries b) { return b *= a; }

TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b)
{
    int k = std::min(a.order(), b.order());
    TruncatedSeries r(k);
    for (int n = 0; n <= k; ++n)
    {
        double t = 0;
        for (int i = 0; i <= n; ++i)
            t += a[i] * b[n - i];
        r[n] = t;
    }
    return r;
}

TruncatedSeries exp(const TruncatedSeries& a)
{
    // E' = A' E  =>  n e_n = sum_k k a_k e_{n-k}
    int k = a.order();
    TruncatedSeries e(k);
    e[0] = std::exp(a[0]);
    for (int n = 1; n <= k; ++n)
    {
        double t = 0;
        for (int j = 1; j <= n; ++j)
            t += j * a[j] * e[n - j];
        e[n] = t / n;
    }
    return e;
}

TruncatedSeries log(const TruncatedSeries& a)
{
    if (!(a[0] > 0))
        throw Error(ErrorKind::domain, "series log needs a positive constant");
    int k = a.order();
    TruncatedSeries l(k);
    l[0] = std::log(a[0]);
    for (int n = 1; n <= k; ++n)
    {
        double t = n * a[n];
        for (int j = 1; j < n; ++j)
            t -= j * l[j] * a[n - j];
        l[n] = t / (n * a[0]);
    }
    return l;
}

TruncatedSeries compose(const TruncatedSeries& f, const TruncatedSeries& g)
{
    if (g[0] != 0)
        throw Error(ErrorKind::domain,
                    "composition needs a zero constant term");
    int k = g.order();
    TruncatedSeries r = TruncatedSeries::constant(k, f[f.order()]);
    for (int n = f.order() - 1; n >= 0; --n)
    {
        r = r * g;
        r[0] += f[n];
    }
    return r;
}

//---------------------------------------------------------------------------//
namespace
{
class PowerTestFunction final : public TestFunctionImpl
{
  public:
    PowerTestFunction(TestFunction phi, int k) : phi_(std::move(phi)), k_(k)
    {
    }

    TestJet jet(const MarkedPoint& p) const override
    {
        auto j = phi_.jet(p);
        double v = j.value;
        double pk1 = std::pow(v, k_ - 1);
        double pk2 = std::pow(v, k_ - 2);
        TestJet r;
        r.value = pk1 * v;
        r.grad = (k_ * pk1) * j.grad;
        r.lap = k_ * (k_ - 1) * pk2 * dot(j.grad, j.grad) + k_ * pk1 * j.lap;
        r.ds = k_ * pk1 * j.ds;
        r.dss = k_ * (k_ - 1) * pk2 * j.ds * j.ds + k_ * pk1 * j.dss;
        return r;
    }

    double value(const MarkedPoint& p) const override
    {
        return std::pow(phi_(p), k_);
    }

    MarkedBox support() const override { return phi_.support(); }
    std::vector<double> x_breakpoints(int axis) const override
    {
        return phi_.x_breakpoints(axis);
    }
    std::vector<double> s_breakpoints() const override
    {
        return phi_.s_breakpoints();
    }

  private:
    TestFunction phi_;
    int k_;
};
}  // namespace

TestFunction power(const TestFunction& phi, int k)
{
    if (k < 1)
        throw Error(ErrorKind::evaluation, "power needs k >= 1");
    if (k == 1)
        return phi;
    return TestFunction(std::make_shared<PowerTestFunction>(phi, k),
                        phi.dim());
}

//---------------------------------------------------------------------------//
PoissonChaos::PoissonChaos(TestFunction phi, const LevyModel& model, int order,
                           int quad_order)
    : phi_(std::move(phi)), order_(order)
{
    if (order_ < 1)
        throw Error(ErrorKind::truncation, "chaos order must be >= 1");
    auto rule = rule_for(phi_, quad_order);
    moments_.assign(order_ + 3, 0.0);
    for (int k = 1; k <= order_ + 2; ++k)
    {
        moments_[k] = integrate_sigma(
            [&](const MarkedPoint& p) { return std::pow(phi_(p), k); }, model,
            rule);
    }
}

void PoissonChaos::check_order(int n) const
{
    if (n < 0 || n > order_)
        throw Error(ErrorKind::truncation,
                    "chaos index " + std::to_string(n) + " exceeds order "
                        + std::to_string(order_));
}

namespace
{
// <phi^k, omega> for k = 0..kmax
std::vector<double> power_pairings(const TestFunction& phi,
                                   const MarkedConfiguration& omega, int kmax)
{
    std::vector<double> r(kmax + 1, 0.0);
    r[0] = static_cast<double>(omega.size());
    for (auto const& p : omega)
    {
        double v = phi(p);
        double vk = 1;
        for (int k = 1; k <= kmax; ++k)
        {
            vk *= v;
            r[k] += vk;
        }
    }
    return r;
}
}  // namespace

TruncatedSeries PoissonChaos::log_series(const MarkedConfiguration& omega) const
{
    auto r = power_pairings(phi_, omega, order_);
    TruncatedSeries a(order_);
    for (int k = 1; k <= order_; ++k)
        a[k] = ((k % 2 == 1) ? 1.0 : -1.0) * r[k] / k;
    a[1] -= moments_[1];
    return a;
}

double PoissonChaos::exponential(const MarkedConfiguration& omega,
                                 double lambda) const
{
    double total = -lambda * moments_[1];
    for (auto const& p : omega)
    {
        double v = 1 + lambda * phi_(p);
        if (!(v > 0))
            throw Error(ErrorKind::domain, "1 + phi must be positive on omega");
        total += std::log(v);
    }
    return std::exp(total);
}

double PoissonChaos::charlier(int n, const MarkedConfiguration& omega) const
{
    check_order(n);
    if (n == 0)
        return 1;
    auto e = exp(log_series(omega));
    return std::tgamma(n + 1.0) * e[n];
}

double PoissonChaos::mixed(int n, const MarkedConfiguration& omega) const
{
    check_order(n);
    if (n < 1)
        throw Error(ErrorKind::truncation, "mixed chaos term needs n >= 1");
    // e(lambda phi + mu phi^2) = exp(A) (1 + mu B) to first order in mu, with
    // B = <phi^2 / (1 + lambda phi), omega> - <phi^2>.
    auto r = power_pairings(phi_, omega, order_ + 2);
    TruncatedSeries b(order_);
    for (int k = 0; k <= order_; ++k)
        b[k] = ((k % 2 == 0) ? 1.0 : -1.0) * r[k + 2];
    b[0] -= moments_[2];
    auto eb = exp(log_series(omega)) * b;
    return std::tgamma(static_cast<double>(n)) * eb[n - 1];
}

double PoissonChaos::charlier_recursion(int n,
                                        const MarkedConfiguration& omega) const
{
    check_order(n);
    double centered = pair(phi_, omega) - moments_[1];
    double q_prev = 1;
    if (n == 0)
        return q_prev;
    double q = centered;
    for (int k = 1; k < n; ++k)
    {
        double next = q * centered - k * mixed(k, omega)
                      - k * q_prev * moments_[2];
        q_prev = q;
        q = next;
    }
    return q;
}

CylinderFunction PoissonChaos::cylinder(int n) const
{
    check_order(n);
    if (n == 0)
        return CylinderFunction::constant(phi_.dim(), 1);
    std::vector<TestFunction> phis;
    for (int k = 1; k <= n; ++k)
        phis.push_back(power(phi_, k));
    double m1 = moments_[1];
    double fact = std::tgamma(n + 1.0);
    auto eval = [n, m1, fact](std::span<const double> r) {
        // Q_n = n! [exp(A)]_n with a_k = c_k r_k, c_k = (-1)^{k+1} / k
        std::vector<double> c(n + 1, 0.0);
        TruncatedSeries a(n);
        for (int k = 1; k <= n; ++k)
        {
            c[k] = ((k % 2 == 1) ? 1.0 : -1.0) / k;
            a[k] = c[k] * r[k - 1];
        }
        a[1] -= m1;
        auto e = exp(a);
        OuterJet j;
        j.value = fact * e[n];
        j.grad.assign(n, 0.0);
        j.hess.assign(n * n, 0.0);
        for (int k = 1; k <= n; ++k)
        {
            j.grad[k - 1] = fact * c[k] * e[n - k];
            for (int l = 1; k + l <= n; ++l)
                j.hess[(k - 1) * n + (l - 1)] = fact * c[k] * c[l] * e[n - k - l];
        }
        return j;
    };
    return CylinderFunction(
        std::move(phis),
        OuterFunction(n, eval, OuterFunction::Growth::polynomial));
}

double poisson_exponential(const TestFunction& phi, const LevyModel& model,
                           const MarkedConfiguration& omega, int quad_order)
{
    double total = -mean_sigma(phi, model, quad_order);
    for (auto const& p : omega)
    {
        double v = 1 + phi(p);
        if (!(v > 0))
            throw Error(ErrorKind::domain, "1 + phi must be positive on omega");
        total += std::log(v);
    }
    return std::exp(total);
}

double charlier(int n, const TestFunction& phi, const LevyModel& model,
                const MarkedConfiguration& omega, int order)
{
    return PoissonChaos(phi, model, order).charlier(n, omega);
}

double charlier_recursion(int n, const TestFunction& phi,
                          const LevyModel& model,
                          const MarkedConfiguration& omega, int order)
{
    return PoissonChaos(phi, model, order).charlier_recursion(n, omega);
}

//---------------------------------------------------------------------------//
double mp_gradient(const ConfigFunctional& f, const MarkedConfiguration& omega,
                   const MarkedPoint& p)
{
    return f(omega.with_point(p)) - f(omega);
}

double mp_gradient(const CylinderFunction& f, const MarkedConfiguration& omega,
                   const MarkedPoint& p)
{
    return f(omega.with_point(p)) - f(omega);
}

double mp_directional(const TestFunction& phi, const ConfigFunctional& f,
                      const LevyModel& model, const MarkedConfiguration& omega,
                      int quad_order)
{
    double base = f(omega);
    return integrate_sigma(
        [&](const MarkedPoint& p) {
            double w = phi(p);
            if (w == 0)
                return 0.0;
            return (f(omega.with_point(p)) - base) * w;
        },
        model, rule_for(phi, quad_order));
}

//---------------------------------------------------------------------------//
namespace
{
// Union of the supports of F's test functions; empty if F is constant
std::optional<MarkedBox> gradient_support(const CylinderFunction& f)
{
    if (f.is_constant())
        return std::nullopt;
    std::optional<MarkedBox> box;
    for (auto const& phi : f.phis())
    {
        if (!phi.compact())
            throw Error(ErrorKind::quadrature,
                        "second quantization needs compact test functions");
        auto b = phi.support();
        if (!box)
        {
            box = b;
            continue;
        }
        box->x = box->x.unite(b.x);
        box->s_lo = std::min(box->s_lo, b.s_lo);
        box->s_hi = std::max(box->s_hi, b.s_hi);
    }
    return box;
}
}  // namespace

SecondQuantForm::SecondQuantForm(BaseOperator a, CylinderFunction f,
                                 CylinderFunction g, const LevyModel& model,
                                 int quad_order)
    : a_(a), f_(std::move(f)), g_(std::move(g)), model_(model)
{
    auto bf = gradient_support(f_);
    auto bg = gradient_support(g_);
    if (!bf || !bg)
        return;
    MarkedBox box;
    box.x = bf->x.intersect(bg->x);
    box.s_lo = std::max(bf->s_lo, bg->s_lo);
    box.s_hi = std::min(bf->s_hi, bg->s_hi);
    if (box.x.empty() || !(box.s_hi > box.s_lo))
        return;
    auto spec = spec_for_support(box, quad_order);
    for (auto const& phi : f_.phis())
        add_breaks(spec, phi);
    for (auto const& phi : g_.phis())
        add_breaks(spec, phi);
    QuadratureRule rule(spec);
    for (auto const& node : rule.nodes())
    {
        double q = model_.q(node.p);
        if (q == 0)
            continue;
        points_.push_back(node.p);
        weights_.push_back(node.w * q);
        for (auto const& phi : f_.phis())
            f_jets_.push_back(phi.jet(node.p));
        for (auto const& phi : g_.phis())
            g_jets_.push_back(phi.jet(node.p));
        if (a_ == BaseOperator::base_dirichlet)
            log_q_.push_back(model_.log_derivatives(node.p));
    }
}

double SecondQuantForm::operator()(const MarkedConfiguration& omega) const
{
    if (weights_.empty())
        return 0;
    auto rf = f_.pairings(omega);
    auto rg = g_.pairings(omega);
    double f0 = f_.outer()(rf);
    double g0 = g_.outer()(rg);
    std::size_t nf = rf.size();
    std::size_t ng = rg.size();
    std::vector<double> sf(nf);
    std::vector<double> sg(ng);
    std::vector<double> terms(weights_.size(), 0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i)
    {
        for (std::size_t j = 0; j < nf; ++j)
            sf[j] = rf[j] + f_jets_[i * nf + j].value;
        double df = f_.outer()(sf) - f0;
        if (df == 0)
            continue;
        for (std::size_t j = 0; j < ng; ++j)
            sg[j] = rg[j] + g_jets_[i * ng + j].value;
        double ag = 0;
        if (a_ == BaseOperator::identity)
        {
            ag = g_.outer()(sg) - g0;
        }
        else
        {
            // Jet of p -> g(r + Phi(p)) by the chain rule
            auto oj = g_.outer().jet(sg);
            TestJet t;
            for (std::size_t j = 0; j < ng; ++j)
            {
                auto const& pj = g_jets_[i * ng + j];
                t.grad = t.grad + oj.grad[j] * pj.grad;
                t.lap += oj.grad[j] * pj.lap;
                t.ds += oj.grad[j] * pj.ds;
                t.dss += oj.grad[j] * pj.dss;
                for (std::size_t k = 0; k < ng; ++k)
                {
                    auto const& pk = g_jets_[i * ng + k];
                    double h = oj.hess[j * ng + k];
                    t.lap += h * dot(pj.grad, pk.grad);
                    t.dss += h * pj.ds * pk.ds;
                }
            }
            auto const& ld = log_q_[i];
            double s = points_[i].s;
            ag = -t.lap - dot(ld.grad_x, t.grad) - s * s * t.dss
                 - 2 * s * t.ds - ld.s_ds * s * t.ds;
        }
        terms[i] = weights_[i] * df * ag;
    }
    return pairwise_sum(terms);
}

McEstimate second_quant_form(BaseOperator a, const CylinderFunction& f,
                             const CylinderFunction& g,
                             const ConfigurationSampler& sampler,
                             std::size_t n, RngSpec spec, int workers,
                             int quad_order)
{
    SecondQuantForm form(a, f, g, sampler.model, quad_order);
    return estimate(sampler, form, n, spec, workers);
}

}  // namespace mpcs
