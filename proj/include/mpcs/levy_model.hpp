// SPDX-License-Identifier: Apache-2.0
//! \file levy_model.hpp
//! The intensity q(x, s) = rho(x) p(x, s) of the marked Poisson measure.
#pragma once

#include <functional>

#include "mpcs/base_space.hpp"
#include "mpcs/montecarlo.hpp"
#include "mpcs/quadrature.hpp"

namespace mpcs
{

enum class SpatialFamily
{
    uniform,
    gaussian,
};

enum class MarkFamily
{
    exponential,
    gamma,
    lognormal,
};

struct SpatialSpec
{
    SpatialFamily family = SpatialFamily::uniform;
    double level = 1;  //!< multiplies the density
    Box box = Box::cube(1, 0, 1);  //!< uniform support
    Vec mean{0, 0, 0};             //!< gaussian centre
    double variance = 1;           //!< gaussian (isotropic) variance
};

/*!
 * Normalized mark density p(x, .).
 *
 * Position dependence enters through `profile`: the exponential rate is
 * rate + rate_slope * profile(x) and the lognormal location is
 * mu + mu_slope * profile(x).
 */
struct MarkSpec
{
    MarkFamily family = MarkFamily::exponential;
    double rate = 1;
    double rate_slope = 0;
    double shape = 1;  //!< gamma shape
    double mu = 0;
    double mu_slope = 0;
    double sigma2 = 1;
    SpatialField profile;
};

//! log-derivatives of q at a point
struct LogDerivatives
{
    Vec grad_x{0, 0, 0};  //!< grad_x log q
    double s_ds = 0;      //!< s d_s log q
};

class LevyModel
{
  public:
    LevyModel(int dim, SpatialSpec spatial, MarkSpec marks);

    //! uniform(level on box) x exponential(rate)
    static LevyModel uniform_exponential(const Box& box, double level = 1,
                                         double rate = 1);
    //! gaussian(0, 1) x lognormal(0, 1) in d = 1
    static LevyModel solvable(double level = 1);

    int dim() const { return dim_; }
    const SpatialSpec& spatial() const { return spatial_; }
    const MarkSpec& marks() const { return marks_; }

    double rho(const Vec& x) const;
    double mark_density(const MarkedPoint& p) const;
    double q(const MarkedPoint& p) const { return rho(p.x) * mark_density(p); }

    //! Throws a domain error where q vanishes
    LogDerivatives log_derivatives(const MarkedPoint& p) const;

    double rate_at(const Vec& x) const;
    double mu_at(const Vec& x) const;

    //! sigma~(Lambda x R+)
    double sigma_mass(const Box& window) const;

    //! Point distributed as sigma~ restricted to the window, normalized
    MarkedPoint sample_point(const Box& window, Rng& rng) const;
    Vec sample_position(const Box& window, Rng& rng) const;
    double sample_mark(const Vec& x, Rng& rng) const;

  private:
    int dim_;
    SpatialSpec spatial_;
    MarkSpec marks_;
};

//! Logarithmic derivative of sigma~ along (v, a) at a point
double beta_point(const LieElement& xi, const LevyModel& model,
                  const MarkedPoint& p);

//! Integral of f against sigma~ with the given Lebesgue rule
double integrate_sigma(const std::function<double(const MarkedPoint&)>& f,
                       const LevyModel& model, const QuadratureRule& rule);

//! Rule on the support of phi (compact), panel edges at its breakpoints
QuadratureRule rule_for(const TestFunction& phi, int order = 64);

//! (phi, psi)_{L^2(sigma~)} on the intersection of the supports
double inner_sigma(const TestFunction& phi, const TestFunction& psi,
                   const LevyModel& model, int order = 64);

//! int phi dsigma~ over the support of phi
double mean_sigma(const TestFunction& phi, const LevyModel& model,
                  int order = 64);

/*!
 * Residual of the integration by parts formula on X x R+:
 *   int (D phi1) phi2 + int phi1 (D phi2) + int phi1 phi2 beta
 * against sigma~, where D is the (v, a) directional derivative.
 *
 * `density` overrides the integrating density (beta still comes from
 * `model`); used for the mismatched-measure negative control.
 */
double base_ibp_residual(
    const LieElement& xi, const TestFunction& phi1, const TestFunction& phi2,
    const LevyModel& model, int order = 64,
    const std::function<double(const MarkedPoint&)>& density = {});

}  // namespace mpcs
