// SPDX-License-Identifier: Apache-2.0
#include "mpcs/quadrature.hpp"

#include <algorithm>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace mpcs
{

Rule1D gauss_legendre(int n, double lo, double hi)
{
    if (n < 1)
        throw Error(ErrorKind::quadrature, "rule needs at least one node");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    double half = 0.5 * (hi - lo);
    double mid = 0.5 * (hi + lo);
    for (int i = 0; i < (n + 1) / 2; ++i)
    {
        // Newton on P_n from the Tricomi initial guess
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k)
            {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1)
            {
                p1 = x;
                p0 = 1;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // Recompute derivative at the converged root
        double p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k)
        {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1);
        double w = 2 / ((1 - x * x) * dp * dp);
        r.nodes[i] = mid - half * x;
        r.nodes[n - 1 - i] = mid + half * x;
        r.weights[i] = r.weights[n - 1 - i] = w * half;
    }
    if (n == 1)
    {
        r.nodes[0] = mid;
        r.weights[0] = 2 * half;
    }
    return r;
}

Rule1D composite_gauss_legendre(int n, double lo, double hi,
                                std::vector<double> breaks)
{
    std::vector<double> edges{lo, hi};
    for (double b : breaks)
    {
        if (b > lo && b < hi)
            edges.push_back(b);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) {
                                return std::abs(a - b) < 1e-14;
                            }),
                edges.end());
    Rule1D out;
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
    {
        auto panel = gauss_legendre(n, edges[k], edges[k + 1]);
        out.nodes.insert(out.nodes.end(), panel.nodes.begin(),
                         panel.nodes.end());
        out.weights.insert(out.weights.end(), panel.weights.begin(),
                           panel.weights.end());
    }
    return out;
}

Rule1D gauss_hermite_normal(int n)
{
    if (n < 1)
        throw Error(ErrorKind::quadrature, "rule needs at least one node");
    // Golub-Welsch: Jacobi matrix of He_n has off-diagonal sqrt(k)
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k)
        jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jac);
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i)
    {
        r.nodes[i] = solver.eigenvalues()(i);
        // Christoffel weights 1 / sum_k p_k(x)^2 over orthonormal He_k: the
        // eigenvector form is only absolutely accurate in the tails
        double x = r.nodes[i];
        double p0 = 1;
        double p1 = x;
        double sum = 1 + (n > 1 ? x * x : 0.0);
        for (int k = 1; k + 1 < n; ++k)
        {
            double p2 = (x * p1 - std::sqrt(static_cast<double>(k)) * p0) /
                        std::sqrt(k + 1.0);
            sum += p2 * p2;
            p0 = p1;
            p1 = p2;
        }
        r.weights[i] = 1 / sum;
    }
    // Symmetrize to remove eigen-solver asymmetry
    for (int i = 0; i < n / 2; ++i)
    {
        double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
        double w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        r.nodes[n / 2] = 0;
    return r;
}

double pairwise_sum(std::span<const double> values)
{
    constexpr std::size_t block = 8;
    if (values.size() <= block)
    {
        double s = 0;
        for (double v : values)
            s += v;
        return s;
    }
    std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

//---------------------------------------------------------------------------//
QuadratureRule::QuadratureRule(const QuadratureSpec& spec) : spec_(spec)
{
    int dim = spec.x_box.dim;
    // Gauss nodes are interior, so s_lo = 0 is fine unless marks are log-spaced
    if (spec.x_box.empty() || !(spec.s_hi > spec.s_lo) || !(spec.s_lo >= 0) ||
        (spec.log_marks && !(spec.s_lo > 0)))
        return;
    for (int i = 0; i < dim; ++i)
    {
        if (!std::isfinite(spec.x_box.lo[i]) || !std::isfinite(spec.x_box.hi[i]))
            throw Error(ErrorKind::quadrature, "unbounded quadrature window");
    }
    if (!std::isfinite(spec.s_hi))
        throw Error(ErrorKind::quadrature, "unbounded mark window");

    std::array<Rule1D, kMaxDim> xr;
    for (int i = 0; i < dim; ++i)
        xr[i] = composite_gauss_legendre(spec.order, spec.x_box.lo[i],
                                         spec.x_box.hi[i], spec.x_breaks[i]);
    Rule1D sr;
    if (spec.log_marks)
    {
        std::vector<double> lb;
        for (double b : spec.s_breaks)
        {
            if (b > 0)
                lb.push_back(std::log(b));
        }
        sr = composite_gauss_legendre(spec.order, std::log(spec.s_lo),
                                      std::log(spec.s_hi), lb);
        for (std::size_t k = 0; k < sr.nodes.size(); ++k)
        {
            sr.nodes[k] = std::exp(sr.nodes[k]);
            sr.weights[k] *= sr.nodes[k];
        }
    }
    else
    {
        sr = composite_gauss_legendre(spec.order, spec.s_lo, spec.s_hi,
                                      spec.s_breaks);
    }

    std::array<std::size_t, kMaxDim> count{1, 1, 1};
    std::size_t total = sr.nodes.size();
    for (int i = 0; i < dim; ++i)
    {
        count[i] = xr[i].nodes.size();
        total *= count[i];
    }
    nodes_.reserve(total);
    for (std::size_t a = 0; a < count[0]; ++a)
    {
        for (std::size_t b = 0; b < count[1]; ++b)
        {
            for (std::size_t c = 0; c < count[2]; ++c)
            {
                QuadratureNode base;
                base.w = 1;
                std::array<std::size_t, kMaxDim> idx{a, b, c};
                for (int i = 0; i < dim; ++i)
                {
                    base.p.x[i] = xr[i].nodes[idx[i]];
                    base.w *= xr[i].weights[idx[i]];
                }
                for (std::size_t k = 0; k < sr.nodes.size(); ++k)
                {
                    QuadratureNode n = base;
                    n.p.s = sr.nodes[k];
                    n.w *= sr.weights[k];
                    nodes_.push_back(n);
                }
            }
        }
    }
}

double integrate(const std::function<double(const MarkedPoint&)>& f,
                 const QuadratureRule& rule)
{
    std::vector<double> terms;
    terms.reserve(rule.size());
    for (auto const& n : rule.nodes())
    {
        double v = f(n.p);
        if (!std::isfinite(v))
            throw Error(ErrorKind::quadrature, "non-finite integrand at node");
        terms.push_back(n.w * v);
    }
    return pairwise_sum(terms);
}

QuadratureSpec spec_for_support(const MarkedBox& box, int order,
                                bool log_marks)
{
    QuadratureSpec spec;
    spec.x_box = box.x;
    spec.s_lo = box.s_lo;
    spec.s_hi = box.s_hi;
    spec.order = order;
    spec.log_marks = log_marks;
    return spec;
}

void add_breaks(QuadratureSpec& spec, const TestFunction& f)
{
    for (int i = 0; i < spec.x_box.dim; ++i)
    {
        auto b = f.x_breakpoints(i);
        spec.x_breaks[i].insert(spec.x_breaks[i].end(), b.begin(), b.end());
    }
    auto s = f.s_breakpoints();
    spec.s_breaks.insert(spec.s_breaks.end(), s.begin(), s.end());
}

void add_breaks(QuadratureSpec& spec, const LieElement& xi)
{
    for (int i = 0; i < spec.x_box.dim; ++i)
    {
        auto b = xi.breakpoints(i);
        spec.x_breaks[i].insert(spec.x_breaks[i].end(), b.begin(), b.end());
    }
}

}  // namespace mpcs
