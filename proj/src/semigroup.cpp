// SPDX-License-Identifier: Apache-2.0
#include "mpcs/semigroup.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace mpcs
{

namespace
{
constexpr double kRankCutoff = 1e-15;

// He_0..He_n at y with first and second derivatives
void hermite_table(int n, double y, std::vector<Jet1>& out)
{
    out.resize(n + 1);
    std::vector<double> h(n + 1);
    h[0] = 1;
    if (n >= 1)
        h[1] = y;
    for (int k = 1; k < n; ++k)
        h[k + 1] = y * h[k] - k * h[k - 1];
    for (int k = 0; k <= n; ++k)
    {
        out[k].v = h[k];
        out[k].d1 = k >= 1 ? k * h[k - 1] : 0.0;
        out[k].d2 = k >= 2 ? k * (k - 1.0) * h[k - 2] : 0.0;
    }
}

/*!
 * sum_r sigma_r f_r(x) g_r(log s) with f_r, g_r Hermite expansions: the
 * coefficient matrix after a truncated SVD.
 */
class SpectralFunction final : public TestFunctionImpl
{
  public:
    SpectralFunction(const SpectralCoeffs& c)
    {
        // Factor in the orthonormal basis He_n / sqrt(n!): in the raw basis
        // high-order coefficients sit below the SVD's absolute accuracy
        std::vector<double> rx(c.nx + 1), ru(c.nu + 1);
        for (int n = 0; n <= c.nx; ++n)
            rx[n] = std::sqrt(std::tgamma(n + 1.0));
        for (int k = 0; k <= c.nu; ++k)
            ru[k] = std::sqrt(std::tgamma(k + 1.0));
        Eigen::MatrixXd m(c.nx + 1, c.nu + 1);
        for (int n = 0; n <= c.nx; ++n)
            for (int k = 0; k <= c.nu; ++k)
                m(n, k) = c.at(n, k) * rx[n] * ru[k];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        auto const& sv = svd.singularValues();
        double top = sv.size() > 0 ? sv(0) : 0.0;
        nx_ = c.nx;
        nu_ = c.nu;
        for (int r = 0; r < sv.size(); ++r)
        {
            if (!(sv(r) > kRankCutoff * top))
                break;
            sigma_.push_back(sv(r));
            std::vector<double> a(nx_ + 1), b(nu_ + 1);
            for (int n = 0; n <= nx_; ++n)
                a[n] = svd.matrixU()(n, r) / rx[n];
            for (int k = 0; k <= nu_; ++k)
                b[k] = svd.matrixV()(k, r) / ru[k];
            fx_.push_back(std::move(a));
            gu_.push_back(std::move(b));
        }
    }

    TestJet jet(const MarkedPoint& p) const override
    {
        TestJet j;
        if (!(p.s > 0))
            return j;
        double u = std::log(p.s);
        std::vector<Jet1> hx, hu;
        hermite_table(nx_, p.x[0], hx);
        hermite_table(nu_, u, hu);
        double f_u = 0;
        double f_uu = 0;
        for (std::size_t r = 0; r < sigma_.size(); ++r)
        {
            Jet1 f, g;
            for (int n = 0; n <= nx_; ++n)
            {
                f.v += fx_[r][n] * hx[n].v;
                f.d1 += fx_[r][n] * hx[n].d1;
                f.d2 += fx_[r][n] * hx[n].d2;
            }
            for (int k = 0; k <= nu_; ++k)
            {
                g.v += gu_[r][k] * hu[k].v;
                g.d1 += gu_[r][k] * hu[k].d1;
                g.d2 += gu_[r][k] * hu[k].d2;
            }
            j.value += sigma_[r] * f.v * g.v;
            j.grad[0] += sigma_[r] * f.d1 * g.v;
            j.lap += sigma_[r] * f.d2 * g.v;
            f_u += sigma_[r] * f.v * g.d1;
            f_uu += sigma_[r] * f.v * g.d2;
        }
        j.ds = f_u / p.s;
        j.dss = (f_uu - f_u) / (p.s * p.s);
        return j;
    }

    double value(const MarkedPoint& p) const override
    {
        if (!(p.s > 0))
            return 0;
        double u = std::log(p.s);
        // Three-term recurrences inline: this is the Monte Carlo hot path
        double total = 0;
        for (std::size_t r = 0; r < sigma_.size(); ++r)
            total += sigma_[r] * series(fx_[r], p.x[0]) * series(gu_[r], u);
        return total;
    }

    MarkedBox support() const override
    {
        MarkedBox b;
        b.x = Box::whole(1);
        return b;
    }
    std::vector<double> x_breakpoints(int) const override { return {}; }
    std::vector<double> s_breakpoints() const override { return {}; }

  private:
    static double series(const std::vector<double>& a, double y)
    {
        double h0 = 1;
        double h1 = y;
        double total = a[0];
        if (a.size() > 1)
            total += a[1] * y;
        for (std::size_t k = 1; k + 1 < a.size(); ++k)
        {
            double h2 = y * h1 - k * h0;
            total += a[k + 1] * h2;
            h0 = h1;
            h1 = h2;
        }
        return total;
    }

    int nx_ = 0;
    int nu_ = 0;
    std::vector<double> sigma_;
    std::vector<std::vector<double>> fx_;
    std::vector<std::vector<double>> gu_;
};
}  // namespace

SpectralBaseOperator::SpectralBaseOperator(double level, int nx, int nu,
                                           int gh_order)
    : model_(LevyModel::solvable(level)), nx_(nx), nu_(nu),
      gh_(gauss_hermite_normal(gh_order))
{
    if (nx_ < 0 || nu_ < 0)
        throw Error(ErrorKind::truncation, "negative spectral truncation");
    if (gh_order < std::max(nx_, nu_) + 1)
        throw Error(ErrorKind::quadrature,
                    "Gauss-Hermite order too small for the truncation");
}

double SpectralBaseOperator::integrate(
    const std::function<double(const MarkedPoint&)>& f) const
{
    std::size_t g = gh_.nodes.size();
    std::vector<double> terms(g * g);
    for (std::size_t i = 0; i < g; ++i)
    {
        for (std::size_t k = 0; k < g; ++k)
        {
            MarkedPoint p{{gh_.nodes[i], 0, 0}, std::exp(gh_.nodes[k])};
            terms[i * g + k] = gh_.weights[i] * gh_.weights[k] * f(p);
        }
    }
    return model_.spatial().level * pairwise_sum(terms);
}

SpectralCoeffs SpectralBaseOperator::coeffs(const TestFunction& phi) const
{
    int g = static_cast<int>(gh_.nodes.size());
    Eigen::MatrixXd vals(g, g);
    double norm2 = 0;
    for (int i = 0; i < g; ++i)
    {
        for (int k = 0; k < g; ++k)
        {
            MarkedPoint p{{gh_.nodes[i], 0, 0}, std::exp(gh_.nodes[k])};
            double v = phi(p);
            if (!std::isfinite(v))
                throw Error(ErrorKind::evaluation,
                            "non-finite test function value at a node");
            vals(i, k) = gh_.weights[i] * gh_.weights[k] * v;
            norm2 += vals(i, k) * v;
        }
    }
    Eigen::MatrixXd hx(nx_ + 1, g);
    Eigen::MatrixXd hu(nu_ + 1, g);
    std::vector<Jet1> tab;
    for (int i = 0; i < g; ++i)
    {
        hermite_table(nx_, gh_.nodes[i], tab);
        for (int n = 0; n <= nx_; ++n)
            hx(n, i) = tab[n].v;
        hermite_table(nu_, gh_.nodes[i], tab);
        for (int m = 0; m <= nu_; ++m)
            hu(m, i) = tab[m].v;
    }
    Eigen::MatrixXd proj = hx * vals * hu.transpose();

    SpectralCoeffs c;
    c.nx = nx_;
    c.nu = nu_;
    c.c.assign((nx_ + 1) * (nu_ + 1), 0.0);
    double level = model_.spatial().level;
    double captured = 0;
    for (int n = 0; n <= nx_; ++n)
    {
        for (int m = 0; m <= nu_; ++m)
        {
            double norm = std::tgamma(n + 1.0) * std::tgamma(m + 1.0);
            c.at(n, m) = proj(n, m) / norm;
            captured += c.at(n, m) * c.at(n, m) * norm;
        }
    }
    c.norm2 = level * norm2;
    c.tail_energy = level * (norm2 - captured);
    return c;
}

SpectralCoeffs SpectralBaseOperator::evolve(const SpectralCoeffs& c,
                                            double t) const
{
    SpectralCoeffs r = c;
    for (int n = 0; n <= c.nx; ++n)
        for (int m = 0; m <= c.nu; ++m)
            r.at(n, m) *= std::exp(-(n + m) * t);
    return r;
}

TestFunction SpectralBaseOperator::synthesize(const SpectralCoeffs& c) const
{
    return TestFunction(std::make_shared<SpectralFunction>(c), 1);
}

TestFunction heat_apply(const SpectralBaseOperator& op, double t,
                        const TestFunction& phi)
{
    return op.synthesize(op.evolve(op.coeffs(phi), t));
}

//---------------------------------------------------------------------------//
LiftedSemigroup::LiftedSemigroup(const SpectralBaseOperator& op,
                                 TestFunction phi)
    : op_(&op), phi_(std::move(phi)), coeffs_(op.coeffs(phi_))
{
    phi_mass_ = op.integrate([&](const MarkedPoint& p) { return phi_(p); });
}

TestFunction LiftedSemigroup::heat(double t) const
{
    if (t == 0)
        return phi_;
    return op_->synthesize(op_->evolve(coeffs_, t));
}

double LiftedSemigroup::correction(double t) const
{
    if (t == 0)
        return 0;
    auto psi = heat(t);
    return op_->integrate([&](const MarkedPoint& p) { return psi(p); })
           - phi_mass_;
}

double LiftedSemigroup::apply(const TestFunction& psi, double correction,
                              const MarkedConfiguration& omega)
{
    double total = -correction;
    for (auto const& p : omega)
    {
        double v = 1 + psi(p);
        if (!(v > 0))
            throw Error(ErrorKind::domain,
                        "1 + e^{-tH} phi must be positive on omega");
        total += std::log(v);
    }
    return std::exp(total);
}

double LiftedSemigroup::operator()(double t,
                                   const MarkedConfiguration& omega) const
{
    return apply(heat(t), correction(t), omega);
}

double lifted_semigroup(const SpectralBaseOperator& op, double t,
                        const TestFunction& phi,
                        const MarkedConfiguration& omega)
{
    if (t < 0)
        throw Error(ErrorKind::domain, "semigroup time must be >= 0");
    return LiftedSemigroup(op, phi)(t, omega);
}

double generator_residual(const SpectralBaseOperator& op,
                          const TestFunction& phi,
                          const MarkedConfiguration& omega, double h)
{
    LiftedSemigroup lifted(op, phi);
    auto d = [&](double step) {
        return (lifted(step, omega) - lifted(-step, omega)) / (2 * step);
    };
    double deriv = (4 * d(h / 2) - d(h)) / 3;
    double drift = 0;
    double log_sum = 0;
    for (auto const& p : omega)
    {
        double v = phi(p);
        drift += base_dirichlet_apply(op.model(), phi, p) / (1 + v);
        log_sum += std::log(1 + v);
    }
    return std::abs(-deriv - drift * std::exp(log_sum));
}

ErgodicityCurve ergodicity_probe(const SpectralBaseOperator& op,
                                 const TestFunction& phi,
                                 const std::vector<double>& times,
                                 const ConfigurationSampler& sampler,
                                 std::size_t n, RngSpec spec, int workers)
{
    LiftedSemigroup lifted(op, phi);
    std::vector<TestFunction> psi;
    std::vector<double> corr;
    for (double t : times)
    {
        psi.push_back(lifted.heat(t));
        corr.push_back(lifted.correction(t));
    }
    auto table = run_samples(
        n, times.size(), spec, workers, [&](Rng& rng, std::span<double> out) {
            auto omega = sampler(rng);
            for (std::size_t i = 0; i < times.size(); ++i)
                out[i] = LiftedSemigroup::apply(psi[i], corr[i], omega);
        });
    ErgodicityCurve curve;
    curve.times = times;
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        auto col = table.column(i);
        auto est = summarize(col);
        std::vector<double> sq(col.size());
        for (std::size_t k = 0; k < col.size(); ++k)
            sq[k] = (col[k] - est.mean) * (col[k] - est.mean);
        double var = col.size() > 1 ? pairwise_sum(sq) / (col.size() - 1) : 0.0;
        curve.mean.push_back(est.mean);
        curve.variance.push_back(var);
    }
    return curve;
}

}  // namespace mpcs
