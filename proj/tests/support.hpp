// SPDX-License-Identifier: Apache-2.0
// Small fixture builders shared by the unit tests.
#pragma once
#include <cmath>
#include <vector>

#include "mpcs/base_space.hpp"
#include "mpcs/calculus.hpp"
#include "mpcs/configuration.hpp"
#include "mpcs/levy_model.hpp"
#include "mpcs/montecarlo.hpp"

namespace testing
{

inline double uni(mpcs::Rng& r, double lo, double hi)
{
    return lo + (hi - lo) * r.uniform();
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1.0);
}

//! Bump test function inside [0, 1]^d x [0.2, 2.5]
inline mpcs::TestFunction random_phi(mpcs::Rng& r, int dim = 1,
                                     bool log_mark = false)
{
    std::vector<mpcs::Factor> x;
    for (int i = 0; i < dim; ++i)
        x.push_back(mpcs::Factor::bump(uni(r, 0.35, 0.65), uni(r, 0.15, 0.3)));
    mpcs::Factor s = log_mark
                         ? mpcs::Factor::bump(uni(r, -0.4, 0.4), uni(r, 0.5, 0.8))
                         : mpcs::Factor::bump(uni(r, 0.8, 1.4), uni(r, 0.4, 0.6));
    double amp = uni(r, 0.3, 0.8) * (r.uniform() < 0.5 ? -1 : 1);
    return mpcs::TestFunction::separable(amp, std::move(x), s, log_mark);
}

inline mpcs::SpatialField random_field(mpcs::Rng& r, int dim, double amp)
{
    std::vector<mpcs::Factor> f;
    for (int i = 0; i < dim; ++i)
        f.push_back(mpcs::Factor::bump(uni(r, 0.4, 0.6), uni(r, 0.25, 0.4)));
    return mpcs::SpatialField::separable(uni(r, -amp, amp), std::move(f));
}

inline mpcs::LieElement random_lie(mpcs::Rng& r, int dim = 1,
                                   bool with_v = true, bool with_a = true)
{
    std::vector<mpcs::SpatialField> v;
    for (int i = 0; i < dim; ++i)
        v.push_back(with_v ? random_field(r, dim, 0.4)
                           : mpcs::SpatialField::zero(dim));
    auto a = with_a ? random_field(r, dim, 0.6) : mpcs::SpatialField::zero(dim);
    return mpcs::LieElement(std::move(v), std::move(a));
}

//! One-dimensional (v, a) with v = cv and a = ca on [-1, 1]
inline mpcs::LieElement plateau_lie(double cv, double ca)
{
    auto pl = mpcs::Factor::plateau(0, 1, 0.5);
    std::vector<mpcs::SpatialField> v{
        cv == 0 ? mpcs::SpatialField::zero(1)
                : mpcs::SpatialField::separable(cv, {pl})};
    auto a = ca == 0 ? mpcs::SpatialField::zero(1)
                     : mpcs::SpatialField::separable(ca, {pl});
    return mpcs::LieElement(std::move(v), std::move(a));
}

inline mpcs::MarkedPoint random_point(mpcs::Rng& r, int dim = 1)
{
    mpcs::MarkedPoint p;
    for (int i = 0; i < dim; ++i)
        p.x[i] = uni(r, 0.1, 0.9);
    p.s = uni(r, 0.3, 2.2);
    return p;
}

inline mpcs::MarkedConfiguration random_config(mpcs::Rng& r, int n,
                                               int dim = 1)
{
    std::vector<mpcs::MarkedPoint> pts;
    for (int k = 0; k < n; ++k)
        pts.push_back(random_point(r, dim));
    return mpcs::MarkedConfiguration(std::move(pts), dim);
}

inline mpcs::LevyModel unit_model(double level = 1)
{
    return mpcs::LevyModel::uniform_exponential(mpcs::Box::cube(1, 0, 1),
                                                level, 1);
}

}  // namespace testing
