// SPDX-License-Identifier: Apache-2.0
//! \file group_action.hpp
//! The group Diff_0(X) x| R+^X acting on X x R+ and on configurations.
#pragma once

#include <functional>
#include <vector>

#include "mpcs/base_space.hpp"
#include "mpcs/configuration.hpp"
#include "mpcs/levy_model.hpp"

namespace mpcs
{

/*!
 * One letter of a group word: (psi, theta) = (psi_t^v, exp(t a)) built from a
 * Lie element at time t, or its inverse.
 */
struct GroupGenerator
{
    LieElement xi;
    double time = 1;
    bool inverted = false;
};

/*!
 * Element of the group, stored as a word g = w_0 w_1 ... w_{k-1}.
 *
 * Acting on a point applies w_{k-1} first. The empty word is the identity.
 */
class GroupElement
{
  public:
    explicit GroupElement(int dim = 1, FlowOptions opts = {});

    static GroupElement identity(int dim) { return GroupElement(dim); }
    //! (psi_t^v, theta = exp(t a))
    static GroupElement from_lie(const LieElement& xi, double time = 1,
                                 FlowOptions opts = {});

    int dim() const { return dim_; }
    const std::vector<GroupGenerator>& word() const { return word_; }
    const FlowOptions& flow_options() const { return opts_; }
    bool is_identity() const { return word_.empty(); }

    //! K_g: union of generator supports padded by the flow displacement
    Box support() const;

    friend GroupElement compose(const GroupElement& g1, const GroupElement& g2);
    friend GroupElement inverse(const GroupElement& g);

  private:
    int dim_;
    FlowOptions opts_;
    std::vector<GroupGenerator> word_;
};

//! g1 g2 = (psi1 o psi2, theta1 (theta2 o psi1^{-1}))
GroupElement compose(const GroupElement& g1, const GroupElement& g2);
//! (psi^{-1}, theta^{-1} o psi)
GroupElement inverse(const GroupElement& g);

//! (psi(x), theta(psi(x)) s)
MarkedPoint act_point(const GroupElement& g, const MarkedPoint& p);
//! Pointwise image; throws a coincidence error if points merge numerically
MarkedConfiguration act_config(const GroupElement& g,
                               const MarkedConfiguration& omega);

//! Image point together with the Jacobian determinant of the map on X x R+
struct PointImage
{
    MarkedPoint p;
    double jacobian = 1;
};
PointImage act_point_with_jacobian(const GroupElement& g, const MarkedPoint& p);

/*!
 * Density of the image measure g_* sigma~ with respect to sigma~:
 *   p_g(x, s) = q(g^{-1}(x, s)) |det D g^{-1}(x, s)| / q(x, s),
 * equal to one outside (K_g)_mk and where either q value vanishes.
 */
double rn_point(const GroupElement& g, const LevyModel& model,
                const MarkedPoint& p);

//! prod over omega of rn_point
double rn_config(const GroupElement& g, const LevyModel& model,
                 const MarkedConfiguration& omega);

using ConfigFunctional = std::function<double(const MarkedConfiguration&)>;

//! (V(g) F)(omega) = F(g^{-1} omega) sqrt(d(g_* pi)/d pi (omega))
double unitary_rep(const GroupElement& g, const LevyModel& model,
                   const ConfigFunctional& f, const MarkedConfiguration& omega);

//! rn_config evaluated on the configuration behind a compound measure
double compound_density(const GroupElement& g, const LevyModel& model,
                        const CompoundMeasure& upsilon);

}  // namespace mpcs
