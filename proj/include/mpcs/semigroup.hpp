// SPDX-License-Identifier: Apache-2.0
//! \file semigroup.hpp
//! Hermite spectral resolution of the solvable base operator and the heat
//! semigroup lifted to exponential functionals.
#pragma once

#include <vector>

#include "mpcs/calculus.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/quadrature.hpp"

namespace mpcs
{

//! Coefficients of phi = sum c_{nm} He_n(x) He_m(log s).
struct SpectralCoeffs
{
    int nx = 0;
    int nu = 0;
    std::vector<double> c;    //!< row-major (nx + 1) x (nu + 1)
    double norm2 = 0;         //!< ||phi||^2_{L^2(sigma~)} by quadrature
    double tail_energy = 0;   //!< norm2 minus the captured energy

    //! Tail energy above the 1e-8 budget
    bool truncated() const { return tail_energy > 1e-8; }

    double at(int n, int m) const { return c[n * (nu + 1) + m]; }
    double& at(int n, int m) { return c[n * (nu + 1) + m]; }
};

/*!
 * H^{X x R+} for gaussian(0, 1) x lognormal(0, 1) marks in d = 1.
 *
 * In (x, u = log s) the operator is a sum of two Ornstein-Uhlenbeck
 * generators with eigenfunctions He_n(x) He_m(u) and eigenvalues n + m.
 */
class SpectralBaseOperator
{
  public:
    explicit SpectralBaseOperator(double level = 1, int nx = 24, int nu = 24,
                                  int gh_order = 96);

    const LevyModel& model() const { return model_; }
    int nx() const { return nx_; }
    int nu() const { return nu_; }

    SpectralCoeffs coeffs(const TestFunction& phi) const;
    //! Coefficients after e^{-tH}
    SpectralCoeffs evolve(const SpectralCoeffs& c, double t) const;
    //! Evaluator for the spectral sum
    TestFunction synthesize(const SpectralCoeffs& c) const;

    //! int f d sigma~ by Gauss-Hermite in (x, log s)
    double integrate(const std::function<double(const MarkedPoint&)>& f) const;

  private:
    LevyModel model_;
    int nx_;
    int nu_;
    Rule1D gh_;
};

//! e^{-tH} phi as an evaluator (t may be negative for difference quotients)
TestFunction heat_apply(const SpectralBaseOperator& op, double t,
                        const TestFunction& phi);

//! exp(<log(1 + e^{-tH} phi), omega> - int (e^{-tH} phi - phi) d sigma~)
double lifted_semigroup(const SpectralBaseOperator& op, double t,
                        const TestFunction& phi,
                        const MarkedConfiguration& omega);

//! Lifted semigroup for a fixed phi, with the spectral data cached
class LiftedSemigroup
{
  public:
    LiftedSemigroup(const SpectralBaseOperator& op, TestFunction phi);

    double operator()(double t, const MarkedConfiguration& omega) const;
    //! int (e^{-tH} phi - phi) d sigma~
    double correction(double t) const;
    TestFunction heat(double t) const;
    //! exp(<log(1 + psi), omega> - correction) for a precomputed psi
    static double apply(const TestFunction& psi, double correction,
                        const MarkedConfiguration& omega);

  private:
    const SpectralBaseOperator* op_;
    TestFunction phi_;
    SpectralCoeffs coeffs_;
    double phi_mass_ = 0;
};

/*!
 * |-(d/dt) lifted_semigroup at t = 0 minus
 *  <(1 + phi)^{-1} H phi, omega> exp(<log(1 + phi), omega>)|
 */
double generator_residual(const SpectralBaseOperator& op,
                          const TestFunction& phi,
                          const MarkedConfiguration& omega, double h = 1e-3);

struct ErgodicityCurve
{
    std::vector<double> times;
    std::vector<double> variance;
    std::vector<double> mean;
};

//! Var(T(t) F) for F = exp(<log(1 + phi), .>) over the sampler's measure
ErgodicityCurve ergodicity_probe(const SpectralBaseOperator& op,
                                 const TestFunction& phi,
                                 const std::vector<double>& times,
                                 const ConfigurationSampler& sampler,
                                 std::size_t n, RngSpec spec, int workers = 1);

}  // namespace mpcs
