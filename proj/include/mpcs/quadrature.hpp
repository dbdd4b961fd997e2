// SPDX-License-Identifier: Apache-2.0
//! \file quadrature.hpp
//! Deterministic tensor-product quadrature on windows of X x R+.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mpcs/base_space.hpp"

namespace mpcs
{

struct Rule1D
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

//! n-point Gauss-Legendre rule on [lo, hi]
Rule1D gauss_legendre(int n, double lo = -1, double hi = 1);

//! Composite Gauss-Legendre: one n-point panel between consecutive breaks
Rule1D composite_gauss_legendre(int n, double lo, double hi,
                                std::vector<double> breaks);

//! n-point Gauss-Hermite rule for the standard normal weight (sum w = 1)
Rule1D gauss_hermite_normal(int n);

//! Sum of numbers in fixed pairwise order
double pairwise_sum(std::span<const double> values);

struct QuadratureSpec
{
    Box x_box;
    double s_lo = 1e-3;
    double s_hi = 50;
    int order = 64;          //!< nodes per panel
    bool log_marks = false;  //!< place mark nodes uniformly in log s
    std::array<std::vector<double>, kMaxDim> x_breaks;
    std::vector<double> s_breaks;
};

struct QuadratureNode
{
    MarkedPoint p;
    double w = 0;
};

//! Node/weight list for Lebesgue measure dx ds on a window.
class QuadratureRule
{
  public:
    QuadratureRule() = default;
    explicit QuadratureRule(const QuadratureSpec& spec);

    const std::vector<QuadratureNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    const QuadratureSpec& spec() const { return spec_; }

  private:
    QuadratureSpec spec_;
    std::vector<QuadratureNode> nodes_;
};

//! Sum of w_i f(node_i); non-finite values raise a quadrature error
double integrate(const std::function<double(const MarkedPoint&)>& f,
                 const QuadratureRule& rule);

//! Spec covering the support of a compact test function, with its
//! breakpoints (and any extra ones) as panel edges
QuadratureSpec spec_for_support(const MarkedBox& box, int order,
                                bool log_marks = false);
void add_breaks(QuadratureSpec& spec, const TestFunction& f);
void add_breaks(QuadratureSpec& spec, const LieElement& xi);

}  // namespace mpcs
