// SPDX-License-Identifier: Apache-2.0
//! \file base_space.hpp
//! Geometry of X x R+ with X = R^d: points, test functions, Lie algebra
//! elements (v, a), flows and currents.
#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "mpcs/errors.hpp"

namespace mpcs
{

inline constexpr int kMaxDim = 3;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Coordinates beyond the active dimension are kept at zero, so dot products
// and determinants over all kMaxDim slots are exact for lower dimensions.
using Vec = std::array<double, kMaxDim>;
using Mat = std::array<Vec, kMaxDim>;

inline double dot(const Vec& a, const Vec& b)
{
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec operator+(const Vec& a, const Vec& b)
{
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec operator-(const Vec& a, const Vec& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec operator*(double c, const Vec& a)
{
    return {c * a[0], c * a[1], c * a[2]};
}
inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

Mat identity_matrix();
Vec operator*(const Mat& m, const Vec& v);
Mat operator*(const Mat& a, const Mat& b);
Mat operator+(const Mat& a, const Mat& b);
Mat operator*(double c, const Mat& m);
double determinant(const Mat& m);
double trace(const Mat& m);

//---------------------------------------------------------------------------//
//! Axis-aligned box in X; infinite bounds are allowed.
struct Box
{
    int dim = 1;
    Vec lo{0, 0, 0};
    Vec hi{0, 0, 0};

    static Box whole(int dim);
    static Box cube(int dim, double lo, double hi);

    bool contains(const Vec& x) const;
    bool empty() const;
    double volume() const;
    Box intersect(const Box& other) const;
    Box unite(const Box& other) const;
    Box padded(double margin) const;
};

//! A position together with a strictly positive mark.
struct MarkedPoint
{
    Vec x{0, 0, 0};
    double s = 1;
};

//! Box in X x R+.
struct MarkedBox
{
    Box x;
    double s_lo = 0;
    double s_hi = kInf;

    bool contains(const MarkedPoint& p) const
    {
        return x.contains(p.x) && p.s >= s_lo && p.s <= s_hi;
    }
};

//---------------------------------------------------------------------------//
//! Value with first and second derivative of a scalar function of one variable.
struct Jet1
{
    double v = 0;
    double d1 = 0;
    double d2 = 0;
};

/*!
 * One-dimensional C^2 building block for separable fields.
 *
 * The bump is b(u) = (1 - u^2)^3 on [-1, 1] mapped affinely to
 * [center - radius, center + radius]. The plateau equals one on
 * [center - half, center + half] and decays to zero across a ramp of the
 * given width with a quintic smoothstep.
 */
class Factor
{
  public:
    enum class Kind
    {
        constant,
        linear,
        bump,
        plateau,
        hermite,
        gauss_poly,
    };

    static Factor constant(double c = 1);
    static Factor linear();
    static Factor bump(double center, double radius);
    static Factor plateau(double center, double half_width, double ramp);
    static Factor hermite(int n);
    //! p(y - c) exp(-alpha (y - c)^2), p given by ascending coefficients
    static Factor gauss_poly(std::vector<double> coeffs, double alpha,
                             double center = 0);

    Jet1 jet(double y) const;
    double operator()(double y) const { return jet(y).v; }

    Kind kind() const { return kind_; }
    double lo() const;
    double hi() const;
    bool compact() const { return std::isfinite(lo()); }
    //! Points where the factor is not C-infinity
    std::vector<double> breakpoints() const;
    //! Upper bound on |f|
    double sup() const;

    // Raw parameters, for serialization
    double p0() const { return a_; }
    double p1() const { return b_; }
    double p2() const { return c_; }
    int order() const { return n_; }
    const std::vector<double>& coeffs() const { return coeffs_; }

  private:
    Kind kind_ = Kind::constant;
    double a_ = 1;
    double b_ = 0;
    double c_ = 0;
    int n_ = 0;
    std::vector<double> coeffs_;
};

//! He_n(y) and its derivatives, probabilists' convention.
Jet1 hermite_jet(int n, double y);

//---------------------------------------------------------------------------//
//! Value, gradient and Hessian of a scalar field on X.
struct FieldJet
{
    double value = 0;
    Vec grad{0, 0, 0};
    Mat hess{};
};

//! Sum of separable terms amp * prod_i f_i(x_i).
class SpatialField
{
  public:
    struct Term
    {
        double amp = 1;
        std::vector<Factor> factors;  // one per active dimension
    };

    SpatialField() = default;
    explicit SpatialField(int dim) : dim_(dim) {}
    SpatialField(int dim, std::vector<Term> terms);

    static SpatialField zero(int dim) { return SpatialField(dim); }
    static SpatialField separable(double amp, std::vector<Factor> factors);

    int dim() const { return dim_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    double value(const Vec& x) const;
    FieldJet jet(const Vec& x) const;
    Box support() const;
    double sup() const;
    std::vector<double> breakpoints(int axis) const;

  private:
    int dim_ = 1;
    std::vector<Term> terms_;
};

//---------------------------------------------------------------------------//
//! Derivatives of a test function at a point.
struct TestJet
{
    double value = 0;
    Vec grad{0, 0, 0};  // spatial gradient
    double lap = 0;     // spatial Laplacian
    double ds = 0;
    double dss = 0;
};

class TestFunctionImpl
{
  public:
    virtual ~TestFunctionImpl() = default;
    virtual TestJet jet(const MarkedPoint& p) const = 0;
    virtual double value(const MarkedPoint& p) const { return jet(p).value; }
    virtual MarkedBox support() const = 0;
    virtual std::vector<double> x_breakpoints(int axis) const = 0;
    virtual std::vector<double> s_breakpoints() const = 0;
};

/*!
 * Element of the test function class: separable products chi(x) eta(s) of
 * C^2 pieces, or an arbitrary evaluator supplying the same derivatives.
 *
 * The mark factor acts either on s directly or on u = log s.
 */
class TestFunction
{
  public:
    struct Term
    {
        double amp = 1;
        std::vector<Factor> x;  // one per active dimension
        Factor s = Factor::constant();
        bool log_mark = false;
    };

    TestFunction();
    TestFunction(int dim, std::vector<Term> terms, double offset = 0);
    explicit TestFunction(std::shared_ptr<const TestFunctionImpl> impl,
                          int dim);

    static TestFunction zero(int dim);
    static TestFunction constant(int dim, double c);
    static TestFunction separable(double amp, std::vector<Factor> x, Factor s,
                                  bool log_mark = false);

    int dim() const { return dim_; }
    TestJet jet(const MarkedPoint& p) const { return impl_->jet(p); }
    double operator()(const MarkedPoint& p) const { return impl_->value(p); }
    MarkedBox support() const { return impl_->support(); }
    bool compact() const;
    std::vector<double> x_breakpoints(int axis) const
    {
        return impl_->x_breakpoints(axis);
    }
    std::vector<double> s_breakpoints() const
    {
        return impl_->s_breakpoints();
    }

    //! Separable description, or nullptr for evaluator-backed functions
    const std::vector<Term>* terms() const;
    double offset() const;

  private:
    std::shared_ptr<const TestFunctionImpl> impl_;
    int dim_ = 1;
};

//---------------------------------------------------------------------------//
//! Vector field v, its Jacobian and divergence, and a scalar field a.
struct LieJet
{
    Vec v{0, 0, 0};
    Mat dv{};  // dv[i][j] = d v_i / d x_j
    double div = 0;
    double a = 0;
    Vec grad_a{0, 0, 0};
};

class LieElementImpl
{
  public:
    virtual ~LieElementImpl() = default;
    virtual LieJet jet(const Vec& x) const = 0;
    virtual Vec velocity(const Vec& x) const { return jet(x).v; }
    virtual double current_exponent(const Vec& x) const { return jet(x).a; }
    virtual Box support() const = 0;
    virtual double speed_bound() const = 0;
    virtual std::vector<double> breakpoints(int axis) const = 0;
};

//! Element (v, a) of V_0(X) x C_0^inf(X).
class LieElement
{
  public:
    LieElement();
    LieElement(std::vector<SpatialField> v, SpatialField a);
    LieElement(std::shared_ptr<const LieElementImpl> impl, int dim);

    static LieElement zero(int dim);

    int dim() const { return dim_; }
    LieJet jet(const Vec& x) const { return impl_->jet(x); }
    Vec velocity(const Vec& x) const { return impl_->velocity(x); }
    double current_exponent(const Vec& x) const
    {
        return impl_->current_exponent(x);
    }
    Box support() const { return impl_->support(); }
    double speed_bound() const { return impl_->speed_bound(); }
    std::vector<double> breakpoints(int axis) const
    {
        return impl_->breakpoints(axis);
    }

    //! Field description, or nullptr for derived elements (brackets)
    const std::vector<SpatialField>* v_fields() const;
    const SpatialField* a_field() const;

    //! (v, 0) and (0, a)
    LieElement vector_part() const;
    LieElement current_part() const;

  private:
    std::shared_ptr<const LieElementImpl> impl_;
    int dim_ = 1;
};

//---------------------------------------------------------------------------//
struct FlowOptions
{
    double step = 1e-3;
    double t_max = 10;
};

struct FlowState
{
    Vec x{0, 0, 0};
    Mat jacobian{};
};

//! psi_t^v(x) by fixed-step RK4
Vec flow(const LieElement& v, double t, const Vec& x,
         const FlowOptions& opts = {});

//! psi_t^v(x) together with D psi_t^v(x) from the variational equation
FlowState flow_with_jacobian(const LieElement& v, double t, const Vec& x,
                             const FlowOptions& opts = {});

inline Mat flow_jacobian(const LieElement& v, double t, const Vec& x,
                         const FlowOptions& opts = {})
{
    return flow_with_jacobian(v, t, x, opts).jacobian;
}

//! theta_t^a(x) = exp(t a(x))
double current(const LieElement& xi, double t, const Vec& x);

//! <grad_x phi, v> + s d_s phi a at p
double directional_derivative_base(const LieElement& xi,
                                   const TestFunction& phi,
                                   const MarkedPoint& p);

}  // namespace mpcs
