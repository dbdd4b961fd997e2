// SPDX-License-Identifier: Apache-2.0
//! \file calculus.hpp
//! Cylinder functions and the intrinsic differential calculus on Omega.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mpcs/configuration.hpp"
#include "mpcs/group_action.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/montecarlo.hpp"

namespace mpcs
{

//---------------------------------------------------------------------------//
//! Value, gradient and Hessian (row-major) of g: R^N -> R.
struct OuterJet
{
    double value = 0;
    std::vector<double> grad;
    std::vector<double> hess;
};

/*!
 * Outer function g_F of a cylinder function.
 *
 * Bounded functions (with bounded derivatives) belong to FC_b, everything
 * else is flagged polynomial.
 */
class OuterFunction
{
  public:
    enum class Growth
    {
        bounded,
        polynomial,
    };
    using Evaluator = std::function<OuterJet(std::span<const double>)>;
    using ValueEvaluator = std::function<double(std::span<const double>)>;

    OuterFunction() : OuterFunction(constant(1, 0)) {}
    OuterFunction(int arity, Evaluator eval, Growth growth,
                  bool is_constant = false, ValueEvaluator value = {});

    static OuterFunction constant(int arity, double c);
    //! c0 + sum c_j r_j
    static OuterFunction linear(std::vector<double> c, double c0 = 0);
    //! 0.5 r^T A r + b.r + c, A symmetric row-major
    static OuterFunction quadratic(std::vector<double> a, std::vector<double> b,
                                   double c = 0);
    //! exp(sum c_j r_j)
    static OuterFunction exponential(std::vector<double> c);
    //! sin(sum c_j r_j + phase)
    static OuterFunction sine(std::vector<double> c, double phase = 0);
    //! exp(-0.5 sum c_j r_j^2)
    static OuterFunction gaussian(std::vector<double> c);
    //! (r, r') -> f(r) g(r')
    static OuterFunction product(const OuterFunction& f, const OuterFunction& g);

    int arity() const { return arity_; }
    Growth growth() const { return growth_; }
    bool bounded() const { return growth_ == Growth::bounded; }
    bool is_constant() const { return constant_; }

    OuterJet jet(std::span<const double> r) const;
    double operator()(std::span<const double> r) const;

  private:
    int arity_ = 1;
    Evaluator eval_;
    ValueEvaluator value_;  // optional fast path without derivatives
    Growth growth_ = Growth::bounded;
    bool constant_ = false;
};

//! F(omega) = g_F(<phi_1, omega>, ..., <phi_N, omega>)
class CylinderFunction
{
  public:
    CylinderFunction();
    CylinderFunction(std::vector<TestFunction> phis, OuterFunction outer);

    static CylinderFunction constant(int dim, double c);
    //! <phi, .>
    static CylinderFunction linear(const TestFunction& phi);

    int dim() const { return phis_.front().dim(); }
    const std::vector<TestFunction>& phis() const { return phis_; }
    const OuterFunction& outer() const { return outer_; }
    bool is_constant() const { return outer_.is_constant(); }

    std::vector<double> pairings(const MarkedConfiguration& omega) const;
    double operator()(const MarkedConfiguration& omega) const;

  private:
    std::vector<TestFunction> phis_;
    OuterFunction outer_;
};

//! F G as a cylinder function on the concatenated test functions
CylinderFunction product(const CylinderFunction& f, const CylinderFunction& g);

double eval(const CylinderFunction& f, const MarkedConfiguration& omega);

//---------------------------------------------------------------------------//
//! Element of T_omega: (u_x, r_x) at every point of omega, in omega's order.
struct TangentVector
{
    std::vector<MarkedPoint> at;
    std::vector<Vec> u;
    std::vector<double> r;

    std::size_t size() const { return at.size(); }
};

double tangent_inner(const TangentVector& a, const TangentVector& b);
//! (v(x), a(x)) at every point of omega
TangentVector lift(const LieElement& xi, const MarkedConfiguration& omega);

//! Vector field sum_j G_j(omega) (v_j, a_j) on Omega
struct FieldTerm
{
    CylinderFunction g;
    LieElement xi;
};
using CylinderField = std::vector<FieldTerm>;

TangentVector field_at(const CylinderField& field,
                       const MarkedConfiguration& omega);

//---------------------------------------------------------------------------//
double dir_derivative(const LieElement& xi, const CylinderFunction& f,
                      const MarkedConfiguration& omega);

TangentVector gradient(const CylinderFunction& f,
                       const MarkedConfiguration& omega);

//! B_{(v,a)}(omega) = <beta_{(v,a)}, omega>
double log_derivative_B(const LieElement& xi, const LevyModel& model,
                        const MarkedConfiguration& omega);

//! div(V) = sum_j grad_{xi_j} G_j + sum_j B_{xi_j} G_j
double divergence_cyl(const CylinderField& field, const LevyModel& model,
                      const MarkedConfiguration& omega);

//! <grad F, grad G>_{T_omega}
double dirichlet_integrand(const CylinderFunction& f, const CylinderFunction& g,
                           const MarkedConfiguration& omega);

//! H^{X x R+} phi at p
double base_dirichlet_apply(const LevyModel& model, const TestFunction& phi,
                            const MarkedPoint& p);

//! Derivative data of phi needed by the base operator
double base_dirichlet_apply(const LevyModel& model, const TestJet& j,
                            const MarkedPoint& p);

//! H^Omega F(omega) for a cylinder function
double dirichlet_operator_apply(const LevyModel& model,
                                const CylinderFunction& f,
                                const MarkedConfiguration& omega);

//! [(v1, a1), (v2, a2)] = ([v1, v2], <grad a2, v1> - <grad a1, v2>)
LieElement lie_bracket(const LieElement& xi1, const LieElement& xi2);

//! Complex value stored as a (real, imaginary) pair
struct ComplexPair
{
    double re = 0;
    double im = 0;
};

//! R(v, a) F = (1/i)(grad_{(v,a)} F + 0.5 B_{(v,a)} F)
ComplexPair generator_R(const LieElement& xi, const LevyModel& model,
                        const CylinderFunction& f,
                        const MarkedConfiguration& omega);

//! grad_{(v,a)} F + 0.5 B_{(v,a)} F, i.e. i R(v, a) F
double symmetric_derivative(const LieElement& xi, const LevyModel& model,
                            const CylinderFunction& f,
                            const MarkedConfiguration& omega);

//---------------------------------------------------------------------------//
// Finite differences along the curve t -> (psi_t^v, exp(t a)).

struct FlowDifference
{
    double h = 1e-5;
    bool richardson = true;
    FlowOptions flow{};
};

//! d/dt H((psi_t, theta_t) omega) at t = 0
double flow_derivative(const LieElement& xi, const ConfigFunctional& h,
                       const MarkedConfiguration& omega,
                       const FlowDifference& opts = {});

//! d/dt f((psi_t, theta_t) p) at t = 0
double flow_derivative(const LieElement& xi,
                       const std::function<double(const MarkedPoint&)>& f,
                       const MarkedPoint& p, const FlowDifference& opts = {});

//! |grad_{[xi1,xi2]} phi - (grad_1 grad_2 - grad_2 grad_1) phi| at p
double bracket_residual(const LieElement& xi1, const LieElement& xi2,
                        const TestFunction& phi, const MarkedPoint& p,
                        const FlowDifference& opts = {});

/*!
 * |[D_1, D_2] F - D_{[xi1, xi2]} F| at omega with D = grad + 0.5 B.
 *
 * The outer derivative is a finite difference along the flow; the inner one
 * is analytic.
 */
double commutator_residual(const LieElement& xi1, const LieElement& xi2,
                           const LevyModel& model, const CylinderFunction& f,
                           const MarkedConfiguration& omega,
                           const FlowDifference& opts = {});

//---------------------------------------------------------------------------//
//! Sampler for pi_{sigma~} or the mixed measure restricted to a window
struct ConfigurationSampler
{
    LevyModel model;
    Box window;
    std::optional<MixingLaw> mixing;

    MarkedConfiguration operator()(Rng& rng) const;
};

//! Paired Monte Carlo estimate of E[(grad F) G + F grad G + F G B]
McEstimate ibp_residual(const CylinderFunction& f, const CylinderFunction& g,
                        const LieElement& xi,
                        const ConfigurationSampler& sampler, std::size_t n,
                        RngSpec spec, int workers = 1);

}  // namespace mpcs
