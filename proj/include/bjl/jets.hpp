#ifndef BJL_JETS_HPP
#define BJL_JETS_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

// Truncated Taylor arithmetic, univariate (Jet1) and bivariate (Jet2),
// plus the two-component map jet (JetMap2) used for iterated billiard maps.
// Coefficients are stored as Taylor coefficients, i.e. partial derivatives
// divided by factorials; JetMap2 exposes derivative-valued accessors.

namespace bjl {

struct Mat2 {
    double a = 0, b = 0, c = 0, d = 0;  // [[a, b], [c, d]]

    double det() const { return a * d - b * c; }
    double trace() const { return a + d; }

    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d,
                c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c, d + o.d}; }
    Mat2 operator-(const Mat2& o) const { return {a - o.a, b - o.b, c - o.c, d - o.d}; }
    Mat2 operator*(double t) const { return {a * t, b * t, c * t, d * t}; }
    Mat2 inverse() const {
        double dt = det();
        return {d / dt, -b / dt, -c / dt, a / dt};
    }
    static Mat2 identity() { return {1, 0, 0, 1}; }
    static Mat2 rotation(double ang) {
        double cs = std::cos(ang), sn = std::sin(ang);
        return {cs, -sn, sn, cs};
    }
    double max_abs() const {
        return std::max(std::max(std::abs(a), std::abs(b)), std::max(std::abs(c), std::abs(d)));
    }
};

// ---------------------------------------------------------------- Jet1

class Jet1 {
  public:
    Jet1() : c_(1, 0.0) {}
    explicit Jet1(int order, double value = 0.0) : c_(order + 1, 0.0) { c_[0] = value; }

    static Jet1 variable(int order, double value) {
        Jet1 j(order, value);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }
    static Jet1 constant(int order, double value) { return Jet1(order, value); }

    int order() const { return static_cast<int>(c_.size()) - 1; }
    double operator[](int k) const { return k <= order() ? c_[k] : 0.0; }
    double& at(int k) { return c_[k]; }
    double value() const { return c_[0]; }

    // k-th derivative value (coefficient times k!)
    double derivative(int k) const;

    Jet1 truncated(int new_order) const;

    Jet1 operator+(const Jet1& o) const;
    Jet1 operator-(const Jet1& o) const;
    Jet1 operator*(const Jet1& o) const;
    Jet1 operator/(const Jet1& o) const;
    Jet1 operator+(double t) const;
    Jet1 operator-(double t) const;
    Jet1 operator*(double t) const;
    Jet1 operator-() const;

    double eval(double dx) const;

  private:
    std::vector<double> c_;

    friend Jet1 exp(const Jet1&);
    friend Jet1 sqrt(const Jet1&);
    friend Jet1 sin(const Jet1&);
    friend Jet1 cos(const Jet1&);
    friend Jet1 reciprocal(const Jet1&);
    friend Jet1 compose(const Jet1&, const Jet1&);
    friend Jet1 derivative_jet(const Jet1&);
    friend Jet1 antiderivative_jet(const Jet1&);
};

Jet1 exp(const Jet1& x);
Jet1 sqrt(const Jet1& x);
Jet1 sin(const Jet1& x);
Jet1 cos(const Jet1& x);
Jet1 reciprocal(const Jet1& x);
// f(g): inner jet g must have zero constant term relative to f's expansion point.
Jet1 compose(const Jet1& f, const Jet1& g_zero_const);
Jet1 derivative_jet(const Jet1& x);       // d/dt, order drops by one
Jet1 antiderivative_jet(const Jet1& x);   // zero constant, order grows by one

// ---------------------------------------------------------------- Jet2

// Bivariate jet in (u, v), truncated at total degree `order`.
class Jet2 {
  public:
    Jet2() : order_(0), c_(1, 0.0) {}
    explicit Jet2(int order, double value = 0.0)
        : order_(order), c_(size_for(order), 0.0) {
        c_[0] = value;
    }

    static Jet2 variable_u(int order, double value);
    static Jet2 variable_v(int order, double value);

    static std::size_t size_for(int order) {
        return static_cast<std::size_t>((order + 1) * (order + 2) / 2);
    }
    static std::size_t index(int a, int b) {
        int d = a + b;
        return static_cast<std::size_t>(d * (d + 1) / 2 + b);
    }

    int order() const { return order_; }
    double coeff(int a, int b) const {
        return (a + b <= order_) ? c_[index(a, b)] : 0.0;
    }
    double& at(int a, int b) { return c_[index(a, b)]; }
    double value() const { return c_[0]; }

    // partial derivative value d^{a+b} / du^a dv^b (coefficient times a! b!)
    double partial(int a, int b) const;

    Jet2 truncated(int new_order) const;

    Jet2 operator+(const Jet2& o) const;
    Jet2 operator-(const Jet2& o) const;
    Jet2 operator*(const Jet2& o) const;
    Jet2 operator/(const Jet2& o) const;
    Jet2 operator+(double t) const;
    Jet2 operator*(double t) const;
    Jet2 operator-() const;

    double eval(double du, double dv) const;

    // d/du and d/dv (order drops by one)
    Jet2 du() const;
    Jet2 dv() const;

    double max_abs_order(int d) const;  // max |coeff| at exactly total degree d

  private:
    int order_;
    std::vector<double> c_;
};

Jet2 exp(const Jet2& x);
Jet2 sqrt(const Jet2& x);
Jet2 sin(const Jet2& x);
Jet2 cos(const Jet2& x);
Jet2 reciprocal(const Jet2& x);

// Univariate series f composed with a bivariate jet with zero constant term.
Jet2 compose_univariate(const Jet1& f, const Jet2& g_zero_const);

// Bivariate jet f(u,v) composed with two bivariate jets (zero constant term).
Jet2 compose_bivariate(const Jet2& f, const Jet2& gu, const Jet2& gv);

// Bivariate jet evaluated along a curve (x(t), y(t)), zero-constant Jet1s.
Jet1 compose_with_curve(const Jet2& f, const Jet1& x, const Jet1& y);

// ---------------------------------------------------------------- JetMap2

struct PhasePoint {
    double s = 0;    // arc length, in [0,1) on the boundary circle
    double phi = 0;  // reflection angle, in (0, pi)
};

// Truncated Taylor expansion of a cylinder map around base_in; s_out/phi_out
// hold Taylor coefficients in (u, v) = (s - base_in.s, phi - base_in.phi).
struct JetMap2 {
    int order = 0;
    PhasePoint base_in, base_out;
    Jet2 s_out, phi_out;

    Mat2 linear() const {
        return {s_out.coeff(1, 0), s_out.coeff(0, 1),
                phi_out.coeff(1, 0), phi_out.coeff(0, 1)};
    }
    // derivative values d^{a+b} s_out / ds^a dphi^b
    double partial_s(int a, int b) const { return s_out.partial(a, b); }
    double partial_phi(int a, int b) const { return phi_out.partial(a, b); }

    static JetMap2 identity(int order, const PhasePoint& base);
};

// outer(inner(x)); inner.base_out must match outer.base_in (s compared mod 1).
JetMap2 compose_maps(const JetMap2& outer, const JetMap2& inner);

// Jet of the inverse map at inner's output base, by Newton in jet space.
JetMap2 invert_map(const JetMap2& m);

// Conjugation by the time reversal (s, phi) -> (s, pi - phi).
JetMap2 reversal_conjugate(const JetMap2& m);

double wrap_unit(double s);              // into [0, 1)
double wrap_angle_pm_pi(double a);       // into (-pi, pi]
double s_distance(double s1, double s2); // cyclic distance on [0,1)

}  // namespace bjl

#endif
