// SPDX-License-Identifier: Apache-2.0
#include "mpcs/base_space.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace mpcs
{

//---------------------------------------------------------------------------//
// LINEAR ALGEBRA
//---------------------------------------------------------------------------//
Mat identity_matrix()
{
    Mat m{};
    for (int i = 0; i < kMaxDim; ++i)
        m[i][i] = 1;
    return m;
}

Vec operator*(const Mat& m, const Vec& v)
{
    return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

Mat operator*(const Mat& a, const Mat& b)
{
    Mat r{};
    for (int i = 0; i < kMaxDim; ++i)
        for (int j = 0; j < kMaxDim; ++j)
            for (int k = 0; k < kMaxDim; ++k)
                r[i][j] += a[i][k] * b[k][j];
    return r;
}

Mat operator+(const Mat& a, const Mat& b)
{
    Mat r{};
    for (int i = 0; i < kMaxDim; ++i)
        for (int j = 0; j < kMaxDim; ++j)
            r[i][j] = a[i][j] + b[i][j];
    return r;
}

Mat operator*(double c, const Mat& m)
{
    Mat r{};
    for (int i = 0; i < kMaxDim; ++i)
        for (int j = 0; j < kMaxDim; ++j)
            r[i][j] = c * m[i][j];
    return r;
}

double determinant(const Mat& m)
{
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
           - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
           + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double trace(const Mat& m) { return m[0][0] + m[1][1] + m[2][2]; }

//---------------------------------------------------------------------------//
// BOX
//---------------------------------------------------------------------------//
Box Box::whole(int dim)
{
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i)
    {
        b.lo[i] = -kInf;
        b.hi[i] = kInf;
    }
    return b;
}

Box Box::cube(int dim, double lo, double hi)
{
    Box b;
    b.dim = dim;
    for (int i = 0; i < dim; ++i)
    {
        b.lo[i] = lo;
        b.hi[i] = hi;
    }
    return b;
}

bool Box::contains(const Vec& x) const
{
    for (int i = 0; i < dim; ++i)
    {
        if (!(x[i] >= lo[i] && x[i] <= hi[i]))
            return false;
    }
    return true;
}

bool Box::empty() const
{
    for (int i = 0; i < dim; ++i)
    {
        if (!(hi[i] > lo[i]))
            return true;
    }
    return false;
}

double Box::volume() const
{
    double v = 1;
    for (int i = 0; i < dim; ++i)
        v *= std::max(0.0, hi[i] - lo[i]);
    return v;
}

Box Box::intersect(const Box& other) const
{
    Box r = *this;
    for (int i = 0; i < dim; ++i)
    {
        r.lo[i] = std::max(lo[i], other.lo[i]);
        r.hi[i] = std::min(hi[i], other.hi[i]);
    }
    return r;
}

Box Box::unite(const Box& other) const
{
    if (other.empty())
        return *this;
    if (this->empty())
        return other;
    Box r = *this;
    for (int i = 0; i < dim; ++i)
    {
        r.lo[i] = std::min(lo[i], other.lo[i]);
        r.hi[i] = std::max(hi[i], other.hi[i]);
    }
    return r;
}

Box Box::padded(double margin) const
{
    Box r = *this;
    for (int i = 0; i < dim; ++i)
    {
        r.lo[i] -= margin;
        r.hi[i] += margin;
    }
    return r;
}

//---------------------------------------------------------------------------//
// FACTOR
//---------------------------------------------------------------------------//
Factor Factor::constant(double c)
{
    Factor f;
    f.kind_ = Kind::constant;
    f.a_ = c;
    return f;
}

Factor Factor::linear()
{
    Factor f;
    f.kind_ = Kind::linear;
    return f;
}

Factor Factor::bump(double center, double radius)
{
    if (!(radius > 0))
        throw Error(ErrorKind::domain, "bump radius must be positive");
    Factor f;
    f.kind_ = Kind::bump;
    f.a_ = center;
    f.b_ = radius;
    return f;
}

Factor Factor::plateau(double center, double half_width, double ramp)
{
    if (!(half_width >= 0) || !(ramp > 0))
        throw Error(ErrorKind::domain, "plateau needs half >= 0, ramp > 0");
    Factor f;
    f.kind_ = Kind::plateau;
    f.a_ = center;
    f.b_ = half_width;
    f.c_ = ramp;
    return f;
}

Factor Factor::hermite(int n)
{
    if (n < 0)
        throw Error(ErrorKind::domain, "negative Hermite order");
    Factor f;
    f.kind_ = Kind::hermite;
    f.n_ = n;
    return f;
}

Factor Factor::gauss_poly(std::vector<double> coeffs, double alpha,
                          double center)
{
    if (!(alpha > 0))
        throw Error(ErrorKind::domain, "gauss_poly needs alpha > 0");
    Factor f;
    f.kind_ = Kind::gauss_poly;
    f.a_ = center;
    f.b_ = alpha;
    f.coeffs_ = std::move(coeffs);
    return f;
}

Jet1 hermite_jet(int n, double y)
{
    // He_{k+1} = y He_k - k He_{k-1}; He_n' = n He_{n-1}
    double hm2 = 0;
    double hm1 = 0;
    double h = 1;
    for (int k = 0; k < n; ++k)
    {
        double next = y * h - k * hm1;
        hm2 = hm1;
        hm1 = h;
        h = next;
    }
    Jet1 j;
    j.v = h;
    j.d1 = n * hm1;
    j.d2 = n * (n - 1) * hm2;
    return j;
}

Jet1 Factor::jet(double y) const
{
    Jet1 j;
    switch (kind_)
    {
        case Kind::constant:
            j.v = a_;
            break;
        case Kind::linear:
            j.v = y;
            j.d1 = 1;
            break;
        case Kind::bump: {
            double u = (y - a_) / b_;
            if (std::abs(u) >= 1)
                break;
            double w = 1 - u * u;
            j.v = w * w * w;
            j.d1 = -6 * u * w * w / b_;
            j.d2 = 6 * w * (5 * u * u - 1) / (b_ * b_);
            break;
        }
        case Kind::plateau: {
            double d = std::abs(y - a_);
            if (d <= b_)
            {
                j.v = 1;
                break;
            }
            if (d >= b_ + c_)
                break;
            double t = (d - b_) / c_;
            double sign = (y >= a_) ? 1.0 : -1.0;
            j.v = 1 - t * t * t * (10 + t * (-15 + 6 * t));
            j.d1 = -sign * 30 * t * t * (1 - t) * (1 - t) / c_;
            j.d2 = -60 * t * (1 - t) * (1 - 2 * t) / (c_ * c_);
            break;
        }
        case Kind::hermite:
            j = hermite_jet(n_, y);
            break;
        case Kind::gauss_poly: {
            double z = y - a_;
            double p = 0, dp = 0, ddp = 0;
            for (std::size_t k = coeffs_.size(); k-- > 0;)
            {
                ddp = ddp * z + 2 * dp;
                dp = dp * z + p;
                p = p * z + coeffs_[k];
            }
            double e = std::exp(-b_ * z * z);
            j.v = p * e;
            j.d1 = (dp - 2 * b_ * z * p) * e;
            j.d2 = (ddp - 4 * b_ * z * dp + (4 * b_ * b_ * z * z - 2 * b_) * p)
                   * e;
            break;
        }
    }
    return j;
}

double Factor::lo() const
{
    switch (kind_)
    {
        case Kind::bump: return a_ - b_;
        case Kind::plateau: return a_ - b_ - c_;
        default: return -kInf;
    }
}

double Factor::hi() const
{
    switch (kind_)
    {
        case Kind::bump: return a_ + b_;
        case Kind::plateau: return a_ + b_ + c_;
        default: return kInf;
    }
}

std::vector<double> Factor::breakpoints() const
{
    switch (kind_)
    {
        case Kind::bump: return {a_ - b_, a_ + b_};
        case Kind::plateau:
            if (b_ > 0)
                return {a_ - b_ - c_, a_ - b_, a_ + b_, a_ + b_ + c_};
            return {a_ - c_, a_, a_ + c_};
        default: return {};
    }
}

double Factor::sup() const
{
    switch (kind_)
    {
        case Kind::constant: return std::abs(a_);
        case Kind::bump:
        case Kind::plateau: return 1;
        case Kind::gauss_poly: {
            // Grid maximum over +-12 standard widths, padded
            double width = 12 / std::sqrt(b_);
            double best = 0;
            constexpr int n = 4000;
            for (int i = 0; i <= n; ++i)
            {
                double y = a_ - width + 2 * width * i / n;
                best = std::max(best, std::abs(jet(y).v));
            }
            return best * 1.05;
        }
        default: return kInf;
    }
}

//---------------------------------------------------------------------------//
// SPATIAL FIELD
//---------------------------------------------------------------------------//
SpatialField::SpatialField(int dim, std::vector<Term> terms)
    : dim_(dim), terms_(std::move(terms))
{
    for (auto const& t : terms_)
    {
        if (static_cast<int>(t.factors.size()) != dim_)
            throw Error(ErrorKind::domain,
                        "spatial term needs one factor per dimension");
    }
}

SpatialField SpatialField::separable(double amp, std::vector<Factor> factors)
{
    int dim = static_cast<int>(factors.size());
    return SpatialField(dim, {Term{amp, std::move(factors)}});
}

double SpatialField::value(const Vec& x) const
{
    double total = 0;
    for (auto const& t : terms_)
    {
        double prod = t.amp;
        for (int i = 0; i < dim_ && prod != 0; ++i)
            prod *= t.factors[i](x[i]);
        total += prod;
    }
    return total;
}

FieldJet SpatialField::jet(const Vec& x) const
{
    FieldJet out;
    std::array<Jet1, kMaxDim> f;
    for (auto const& t : terms_)
    {
        bool outside = false;
        for (int i = 0; i < dim_; ++i)
        {
            if (x[i] < t.factors[i].lo() || x[i] > t.factors[i].hi())
            {
                outside = true;
                break;
            }
            f[i] = t.factors[i].jet(x[i]);
        }
        if (outside)
            continue;
        // Products with factor i (and j) left out
        auto prod_except = [&](int skip1, int skip2) {
            double p = t.amp;
            for (int k = 0; k < dim_; ++k)
            {
                if (k != skip1 && k != skip2)
                    p *= f[k].v;
            }
            return p;
        };
        out.value += prod_except(-1, -1);
        for (int i = 0; i < dim_; ++i)
        {
            double pi = prod_except(i, -1);
            out.grad[i] += f[i].d1 * pi;
            out.hess[i][i] += f[i].d2 * pi;
            for (int j = i + 1; j < dim_; ++j)
            {
                double pij = f[i].d1 * f[j].d1 * prod_except(i, j);
                out.hess[i][j] += pij;
                out.hess[j][i] += pij;
            }
        }
    }
    return out;
}

Box SpatialField::support() const
{
    Box total = Box::cube(dim_, 0, 0);
    bool first = true;
    for (auto const& t : terms_)
    {
        Box b;
        b.dim = dim_;
        for (int i = 0; i < dim_; ++i)
        {
            b.lo[i] = t.factors[i].lo();
            b.hi[i] = t.factors[i].hi();
        }
        total = first ? b : total.unite(b);
        first = false;
    }
    return total;
}

double SpatialField::sup() const
{
    double s = 0;
    for (auto const& t : terms_)
    {
        double p = std::abs(t.amp);
        for (int i = 0; i < dim_; ++i)
            p *= t.factors[i].sup();
        s += p;
    }
    return s;
}

std::vector<double> SpatialField::breakpoints(int axis) const
{
    std::vector<double> out;
    for (auto const& t : terms_)
    {
        auto b = t.factors[axis].breakpoints();
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

//---------------------------------------------------------------------------//
// TEST FUNCTION
//---------------------------------------------------------------------------//
namespace
{
class SeparableTestFunction final : public TestFunctionImpl
{
  public:
    SeparableTestFunction(int dim, std::vector<TestFunction::Term> terms,
                          double offset)
        : dim_(dim), terms_(std::move(terms)), offset_(offset)
    {
        for (auto const& t : terms_)
        {
            if (static_cast<int>(t.x.size()) != dim_)
                throw Error(ErrorKind::domain,
                            "test function term needs one factor per "
                            "dimension");
            if (!t.log_mark && t.s.compact() && !(t.s.lo() > 0))
                throw Error(ErrorKind::domain,
                            "mark support must lie in (0, inf)");
        }
    }

    static Jet1 mark_jet(const TestFunction::Term& t, double s)
    {
        if (!t.log_mark)
            return t.s.jet(s);
        Jet1 u = t.s.jet(std::log(s));
        Jet1 j;
        j.v = u.v;
        j.d1 = u.d1 / s;
        j.d2 = (u.d2 - u.d1) / (s * s);
        return j;
    }

    bool outside(const TestFunction::Term& t, const MarkedPoint& p) const
    {
        for (int i = 0; i < dim_; ++i)
        {
            if (p.x[i] < t.x[i].lo() || p.x[i] > t.x[i].hi())
                return true;
        }
        double m = t.log_mark ? std::log(p.s) : p.s;
        return m < t.s.lo() || m > t.s.hi();
    }

    double value(const MarkedPoint& p) const final
    {
        double total = offset_;
        for (auto const& t : terms_)
        {
            if (outside(t, p))
                continue;
            double prod = t.amp;
            for (int i = 0; i < dim_; ++i)
                prod *= t.x[i](p.x[i]);
            prod *= t.s(t.log_mark ? std::log(p.s) : p.s);
            total += prod;
        }
        return total;
    }

    TestJet jet(const MarkedPoint& p) const final
    {
        TestJet out;
        out.value = offset_;
        std::array<Jet1, kMaxDim> f;
        for (auto const& t : terms_)
        {
            if (outside(t, p))
                continue;
            for (int i = 0; i < dim_; ++i)
                f[i] = t.x[i].jet(p.x[i]);
            Jet1 g = mark_jet(t, p.s);
            double all = t.amp;
            for (int i = 0; i < dim_; ++i)
                all *= f[i].v;
            out.value += all * g.v;
            out.ds += all * g.d1;
            out.dss += all * g.d2;
            for (int i = 0; i < dim_; ++i)
            {
                double rest = t.amp * g.v;
                for (int k = 0; k < dim_; ++k)
                {
                    if (k != i)
                        rest *= f[k].v;
                }
                out.grad[i] += f[i].d1 * rest;
                out.lap += f[i].d2 * rest;
            }
        }
        return out;
    }

    MarkedBox support() const final
    {
        MarkedBox total;
        total.x = Box::cube(dim_, 0, 0);
        total.s_lo = kInf;
        total.s_hi = 0;
        if (offset_ != 0)
        {
            total.x = Box::whole(dim_);
            total.s_lo = 0;
            total.s_hi = kInf;
            return total;
        }
        bool first = true;
        for (auto const& t : terms_)
        {
            Box b;
            b.dim = dim_;
            for (int i = 0; i < dim_; ++i)
            {
                b.lo[i] = t.x[i].lo();
                b.hi[i] = t.x[i].hi();
            }
            double slo = t.log_mark ? std::exp(t.s.lo()) : t.s.lo();
            double shi = t.log_mark ? std::exp(t.s.hi()) : t.s.hi();
            slo = std::max(slo, 0.0);
            total.x = first ? b : total.x.unite(b);
            total.s_lo = std::min(total.s_lo, slo);
            total.s_hi = std::max(total.s_hi, shi);
            first = false;
        }
        if (first)
        {
            total.s_lo = 1;
            total.s_hi = 1;
        }
        return total;
    }

    std::vector<double> x_breakpoints(int axis) const final
    {
        std::vector<double> out;
        for (auto const& t : terms_)
        {
            auto b = t.x[axis].breakpoints();
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }

    std::vector<double> s_breakpoints() const final
    {
        std::vector<double> out;
        for (auto const& t : terms_)
        {
            for (double b : t.s.breakpoints())
                out.push_back(t.log_mark ? std::exp(b) : b);
        }
        return out;
    }

    const std::vector<TestFunction::Term>& terms() const { return terms_; }
    double offset() const { return offset_; }

  private:
    int dim_;
    std::vector<TestFunction::Term> terms_;
    double offset_;
};
}  // namespace

TestFunction::TestFunction() : TestFunction(1, {}, 0) {}

TestFunction::TestFunction(int dim, std::vector<Term> terms, double offset)
    : impl_(std::make_shared<SeparableTestFunction>(dim, std::move(terms),
                                                    offset))
    , dim_(dim)
{
}

TestFunction::TestFunction(std::shared_ptr<const TestFunctionImpl> impl,
                           int dim)
    : impl_(std::move(impl)), dim_(dim)
{
}

TestFunction TestFunction::zero(int dim) { return TestFunction(dim, {}, 0); }

TestFunction TestFunction::constant(int dim, double c)
{
    return TestFunction(dim, {}, c);
}

TestFunction TestFunction::separable(double amp, std::vector<Factor> x,
                                     Factor s, bool log_mark)
{
    int dim = static_cast<int>(x.size());
    return TestFunction(dim, {Term{amp, std::move(x), s, log_mark}}, 0);
}

bool TestFunction::compact() const
{
    auto sup = support();
    if (sup.x.empty())
        return true;
    for (int i = 0; i < dim_; ++i)
    {
        if (!std::isfinite(sup.x.lo[i]) || !std::isfinite(sup.x.hi[i]))
            return false;
    }
    return std::isfinite(sup.s_hi) && sup.s_lo > 0;
}

const std::vector<TestFunction::Term>* TestFunction::terms() const
{
    auto* sep = dynamic_cast<const SeparableTestFunction*>(impl_.get());
    return sep ? &sep->terms() : nullptr;
}

double TestFunction::offset() const
{
    auto* sep = dynamic_cast<const SeparableTestFunction*>(impl_.get());
    return sep ? sep->offset() : 0;
}

//---------------------------------------------------------------------------//
// LIE ELEMENT
//---------------------------------------------------------------------------//
namespace
{
class FieldLieElement final : public LieElementImpl
{
  public:
    FieldLieElement(std::vector<SpatialField> v, SpatialField a)
        : v_(std::move(v)), a_(std::move(a))
    {
        dim_ = a_.dim();
        if (static_cast<int>(v_.size()) != dim_)
            throw Error(ErrorKind::domain,
                        "vector field needs one component per dimension");
        support_ = Box::cube(dim_, 0, 0);
        bool first = true;
        auto add = [&](const SpatialField& f) {
            if (f.is_zero())
                return;
            support_ = first ? f.support() : support_.unite(f.support());
            first = false;
        };
        for (auto const& c : v_)
            add(c);
        add(a_);
        double s2 = 0;
        for (auto const& c : v_)
            s2 += c.sup() * c.sup();
        speed_ = std::sqrt(s2);
    }

    LieJet jet(const Vec& x) const final
    {
        LieJet j;
        if (!support_.contains(x))
            return j;
        for (int i = 0; i < dim_; ++i)
        {
            auto fj = v_[i].jet(x);
            j.v[i] = fj.value;
            j.dv[i] = fj.grad;
        }
        for (int i = 0; i < dim_; ++i)
            j.div += j.dv[i][i];
        auto aj = a_.jet(x);
        j.a = aj.value;
        j.grad_a = aj.grad;
        return j;
    }

    Vec velocity(const Vec& x) const final
    {
        Vec out{0, 0, 0};
        if (!support_.contains(x))
            return out;
        for (int i = 0; i < dim_; ++i)
            out[i] = v_[i].value(x);
        return out;
    }

    double current_exponent(const Vec& x) const final
    {
        if (!support_.contains(x))
            return 0;
        return a_.value(x);
    }

    Box support() const final { return support_; }
    double speed_bound() const final { return speed_; }

    std::vector<double> breakpoints(int axis) const final
    {
        auto out = a_.breakpoints(axis);
        for (auto const& c : v_)
        {
            auto b = c.breakpoints(axis);
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }

    const std::vector<SpatialField>& v() const { return v_; }
    const SpatialField& a() const { return a_; }

  private:
    std::vector<SpatialField> v_;
    SpatialField a_;
    int dim_ = 1;
    Box support_;
    double speed_ = 0;
};
}  // namespace

LieElement::LieElement() : LieElement(zero(1)) {}

LieElement::LieElement(std::vector<SpatialField> v, SpatialField a)
    : impl_(std::make_shared<FieldLieElement>(std::move(v), std::move(a)))
{
    dim_ = impl_ ? static_cast<const FieldLieElement&>(*impl_).a().dim() : 1;
}

LieElement::LieElement(std::shared_ptr<const LieElementImpl> impl, int dim)
    : impl_(std::move(impl)), dim_(dim)
{
}

LieElement LieElement::zero(int dim)
{
    return LieElement(std::vector<SpatialField>(dim, SpatialField(dim)),
                      SpatialField(dim));
}

const std::vector<SpatialField>* LieElement::v_fields() const
{
    auto* f = dynamic_cast<const FieldLieElement*>(impl_.get());
    return f ? &f->v() : nullptr;
}

const SpatialField* LieElement::a_field() const
{
    auto* f = dynamic_cast<const FieldLieElement*>(impl_.get());
    return f ? &f->a() : nullptr;
}

LieElement LieElement::vector_part() const
{
    auto* v = v_fields();
    if (!v)
        throw Error(ErrorKind::domain, "vector_part needs a field element");
    return LieElement(*v, SpatialField(dim_));
}

LieElement LieElement::current_part() const
{
    auto* a = a_field();
    if (!a)
        throw Error(ErrorKind::domain, "current_part needs a field element");
    return LieElement(std::vector<SpatialField>(dim_, SpatialField(dim_)), *a);
}

//---------------------------------------------------------------------------//
// FLOWS
//---------------------------------------------------------------------------//
namespace
{
void check_time(double t, const FlowOptions& opts)
{
    if (!(std::abs(t) <= opts.t_max))
        throw Error(ErrorKind::domain,
                    "flow time " + std::to_string(t) + " exceeds t_max");
    if (!(opts.step > 0))
        throw Error(ErrorKind::domain, "flow step must be positive");
}

bool finite(const Vec& x)
{
    return std::isfinite(x[0]) && std::isfinite(x[1]) && std::isfinite(x[2]);
}
}  // namespace

Vec flow(const LieElement& v, double t, const Vec& x, const FlowOptions& opts)
{
    check_time(t, opts);
    if (t == 0 || !v.support().contains(x))
        return x;
    int n = static_cast<int>(std::ceil(std::abs(t) / opts.step));
    double h = t / n;
    Vec y = x;
    for (int i = 0; i < n; ++i)
    {
        Vec k1 = v.velocity(y);
        Vec k2 = v.velocity(y + (0.5 * h) * k1);
        Vec k3 = v.velocity(y + (0.5 * h) * k2);
        Vec k4 = v.velocity(y + h * k3);
        y = y + (h / 6) * (k1 + 2.0 * (k2 + k3) + k4);
        if (!finite(y))
            throw Error(ErrorKind::integration_diverged,
                        "non-finite state in flow");
    }
    return y;
}

FlowState flow_with_jacobian(const LieElement& v, double t, const Vec& x,
                             const FlowOptions& opts)
{
    check_time(t, opts);
    FlowState st{x, identity_matrix()};
    if (t == 0 || !v.support().contains(x))
        return st;
    int n = static_cast<int>(std::ceil(std::abs(t) / opts.step));
    double h = t / n;
    for (int i = 0; i < n; ++i)
    {
        auto j1 = v.jet(st.x);
        Vec k1 = j1.v;
        Mat m1 = j1.dv * st.jacobian;

        auto j2 = v.jet(st.x + (0.5 * h) * k1);
        Vec k2 = j2.v;
        Mat m2 = j2.dv * (st.jacobian + (0.5 * h) * m1);

        auto j3 = v.jet(st.x + (0.5 * h) * k2);
        Vec k3 = j3.v;
        Mat m3 = j3.dv * (st.jacobian + (0.5 * h) * m2);

        auto j4 = v.jet(st.x + h * k3);
        Vec k4 = j4.v;
        Mat m4 = j4.dv * (st.jacobian + h * m3);

        st.x = st.x + (h / 6) * (k1 + 2.0 * (k2 + k3) + k4);
        st.jacobian = st.jacobian + (h / 6) * (m1 + 2.0 * (m2 + m3) + m4);
        if (!finite(st.x))
            throw Error(ErrorKind::integration_diverged,
                        "non-finite state in variational flow");
    }
    return st;
}

double current(const LieElement& xi, double t, const Vec& x)
{
    if (t == 0)
        return 1;
    return std::exp(t * xi.current_exponent(x));
}

double directional_derivative_base(const LieElement& xi,
                                   const TestFunction& phi,
                                   const MarkedPoint& p)
{
    auto lj = xi.jet(p.x);
    auto tj = phi.jet(p);
    return dot(tj.grad, lj.v) + p.s * tj.ds * lj.a;
}

}  // namespace mpcs
