// SPDX-License-Identifier: Apache-2.0
//! \file configuration.hpp
//! Finite marked configurations, pairings, counts and samplers.
#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mpcs/base_space.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/montecarlo.hpp"

namespace mpcs
{

inline constexpr double kCoincideEps = 1e-12;

//! Lexicographic order on positions, then marks
bool point_less(const MarkedPoint& a, const MarkedPoint& b);

/*!
 * Finite marked configuration with pairwise distinct positions.
 *
 * Points are kept in canonical (lexicographic) order so that equal sets
 * compare equal.
 */
class MarkedConfiguration
{
  public:
    MarkedConfiguration() = default;
    //! Sorts and checks distinctness; throws a coincidence error
    MarkedConfiguration(std::vector<MarkedPoint> points, int dim);

    int dim() const { return dim_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<MarkedPoint>& points() const { return points_; }
    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }
    const MarkedPoint& operator[](std::size_t i) const { return points_[i]; }

    //! omega + epsilon_p; throws if p's position is already occupied
    MarkedConfiguration with_point(const MarkedPoint& p) const;
    //! Union of configurations over disjoint positions
    MarkedConfiguration merged(const MarkedConfiguration& other) const;

    bool operator==(const MarkedConfiguration& o) const;

  private:
    int dim_ = 1;
    std::vector<MarkedPoint> points_;
};

//! True if positions a and b are closer than kCoincideEps
bool coincide(const Vec& a, const Vec& b);

//! <f, omega>
double pair(const std::function<double(const MarkedPoint&)>& f,
            const MarkedConfiguration& omega);
double pair(const TestFunction& f, const MarkedConfiguration& omega);

//! N_B(omega), B half-open in every coordinate: [lo, hi)
std::size_t count(const MarkedBox& b, const MarkedConfiguration& omega);

//! Discrete mixing law nu = sum_k w_k delta_{z_k}
class MixingLaw
{
  public:
    struct Atom
    {
        double z = 1;
        double w = 1;
    };

    MixingLaw() : atoms_{{1, 1}} {}
    explicit MixingLaw(std::vector<Atom> atoms);
    static MixingLaw dirac(double z) { return MixingLaw({{z, 1}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    double mean() const;
    double sample(Rng& rng) const;

  private:
    std::vector<Atom> atoms_;
};

//! Draw from pi_{z sigma~} restricted to the window
MarkedConfiguration sample_poisson(const LevyModel& model, const Box& window,
                                   Rng& rng, double intensity = 1);

//! Draw (z, omega) from the mixed measure
std::pair<double, MarkedConfiguration>
sample_mixed(const LevyModel& model, const MixingLaw& nu, const Box& window,
             Rng& rng);

//---------------------------------------------------------------------------//
//! Weighted atomic measure sum_x s_x delta_x
struct CompoundMeasure
{
    struct Atom
    {
        Vec x{0, 0, 0};
        double weight = 1;
    };
    int dim = 1;
    std::vector<Atom> atoms;
};

CompoundMeasure to_compound(const MarkedConfiguration& omega);
MarkedConfiguration from_compound(const CompoundMeasure& u);
//! <u, upsilon> for a spatial function u
double pair_compound(const std::function<double(const Vec&)>& u,
                     const CompoundMeasure& upsilon);

//---------------------------------------------------------------------------//
//! CSV dump with header x1,...,xd,s
void write_csv(std::ostream& os, const MarkedConfiguration& omega);
std::string to_csv(const MarkedConfiguration& omega);

}  // namespace mpcs
