// SPDX-License-Identifier: Apache-2.0
//! \file chaos_fock.hpp
//! Poisson exponentials, Charlier chaos and the marked Poisson gradient.
#pragma once

#include <vector>

#include "mpcs/calculus.hpp"
#include "mpcs/configuration.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/montecarlo.hpp"

namespace mpcs
{

//! Formal power series c_0 + c_1 t + ... + c_K t^K in one parameter.
class TruncatedSeries
{
  public:
    explicit TruncatedSeries(int order = 0);
    explicit TruncatedSeries(std::vector<double> coeffs);

    static TruncatedSeries constant(int order, double c);
    //! The parameter t itself
    static TruncatedSeries variable(int order);

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return c_[k]; }
    double& operator[](int k) { return c_[k]; }
    const std::vector<double>& coeffs() const { return c_; }

    //! Horner evaluation at t
    double evaluate(double t) const;

    TruncatedSeries& operator+=(const TruncatedSeries& o);
    TruncatedSeries& operator-=(const TruncatedSeries& o);
    TruncatedSeries& operator*=(double a);

  private:
    std::vector<double> c_;
};

TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b);
TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b);
TruncatedSeries operator*(double a, TruncatedSeries b);
//! Cauchy product truncated at the smaller order
TruncatedSeries operator*(const TruncatedSeries& a, const TruncatedSeries& b);
TruncatedSeries exp(const TruncatedSeries& a);
//! Requires a_0 > 0
TruncatedSeries log(const TruncatedSeries& a);
//! f(g(t)); requires g_0 = 0
TruncatedSeries compose(const TruncatedSeries& f, const TruncatedSeries& g);

//---------------------------------------------------------------------------//
//! phi^k as a test function
TestFunction power(const TestFunction& phi, int k);

/*!
 * Chaos data for a fixed phi: the moments <phi^k>_{sigma~} and the
 * generating functions of Q_n(phi^{(x)n}; omega).
 */
class PoissonChaos
{
  public:
    PoissonChaos(TestFunction phi, const LevyModel& model, int order = 8,
                 int quad_order = 64);

    const TestFunction& phi() const { return phi_; }
    int order() const { return order_; }
    //! <phi^k>_{sigma~}, k >= 1
    double moment(int k) const { return moments_.at(k); }

    //! lambda -> <log(1 + lambda phi), omega> - lambda <phi>
    TruncatedSeries log_series(const MarkedConfiguration& omega) const;

    //! e(lambda phi; omega)
    double exponential(const MarkedConfiguration& omega,
                       double lambda = 1) const;
    //! Q_n(phi^{(x)n}; omega) from the generating function
    double charlier(int n, const MarkedConfiguration& omega) const;
    //! Q_n(phi^{(x)(n-1)} (x) phi^2; omega) from the two-parameter series
    double mixed(int n, const MarkedConfiguration& omega) const;
    //! Q_n by the three-term recursion
    double charlier_recursion(int n, const MarkedConfiguration& omega) const;

    //! Q_n as a cylinder function of <phi>, ..., <phi^n>
    CylinderFunction cylinder(int n) const;

  private:
    void check_order(int n) const;

    TestFunction phi_;
    int order_;
    std::vector<double> moments_;
};

//! exp(<log(1 + phi), omega> - <phi>_{sigma~})
double poisson_exponential(const TestFunction& phi, const LevyModel& model,
                           const MarkedConfiguration& omega,
                           int quad_order = 64);
double charlier(int n, const TestFunction& phi, const LevyModel& model,
                const MarkedConfiguration& omega, int order = 8);
double charlier_recursion(int n, const TestFunction& phi,
                          const LevyModel& model,
                          const MarkedConfiguration& omega, int order = 8);

//---------------------------------------------------------------------------//
//! F(omega + eps_p) - F(omega)
double mp_gradient(const ConfigFunctional& f, const MarkedConfiguration& omega,
                   const MarkedPoint& p);
double mp_gradient(const CylinderFunction& f, const MarkedConfiguration& omega,
                   const MarkedPoint& p);

//! (grad^MP F(omega), phi)_{L^2(sigma~)} by quadrature on phi's support
double mp_directional(const TestFunction& phi, const ConfigFunctional& f,
                      const LevyModel& model, const MarkedConfiguration& omega,
                      int quad_order = 64);

enum class BaseOperator
{
    identity,
    base_dirichlet,
};

/*!
 * Quadrature data for (grad^MP F, A grad^MP G)_{L^2(sigma~)} with cylinder
 * F and G. Test function jets at the nodes are cached, so evaluating at a
 * configuration only touches the outer functions.
 */
class SecondQuantForm
{
  public:
    SecondQuantForm(BaseOperator a, CylinderFunction f, CylinderFunction g,
                    const LevyModel& model, int quad_order = 12);

    double operator()(const MarkedConfiguration& omega) const;
    std::size_t nodes() const { return weights_.size(); }

  private:
    BaseOperator a_;
    CylinderFunction f_;
    CylinderFunction g_;
    LevyModel model_;
    std::vector<MarkedPoint> points_;
    std::vector<double> weights_;  // quadrature weight times q
    std::vector<TestJet> f_jets_;  // node-major, N_F per node
    std::vector<TestJet> g_jets_;
    std::vector<LogDerivatives> log_q_;
};

//! Monte Carlo estimate of E_pi[(grad^MP F, A grad^MP G)_{L^2(sigma~)}]
McEstimate second_quant_form(BaseOperator a, const CylinderFunction& f,
                             const CylinderFunction& g,
                             const ConfigurationSampler& sampler,
                             std::size_t n, RngSpec spec, int workers = 1,
                             int quad_order = 12);

}  // namespace mpcs
