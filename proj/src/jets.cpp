#include "bjl/jets.hpp"

#include <algorithm>

namespace bjl {

namespace {
double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}
}  // namespace

double wrap_unit(double s) {
    double r = s - std::floor(s);
    if (r >= 1.0) r -= 1.0;
    return r;
}

double wrap_angle_pm_pi(double a) {
    double r = std::remainder(a, 2.0 * M_PI);
    if (r <= -M_PI) r += 2.0 * M_PI;
    return r;
}

double s_distance(double s1, double s2) {
    double d = std::abs(wrap_unit(s1) - wrap_unit(s2));
    return std::min(d, 1.0 - d);
}

// ---------------------------------------------------------------- Jet1

double Jet1::derivative(int k) const { return (*this)[k] * factorial(k); }

Jet1 Jet1::truncated(int new_order) const {
    Jet1 r(new_order);
    for (int k = 0; k <= std::min(new_order, order()); ++k) r.c_[k] = c_[k];
    return r;
}

Jet1 Jet1::operator+(const Jet1& o) const {
    Jet1 r(std::min(order(), o.order()));
    for (int k = 0; k <= r.order(); ++k) r.c_[k] = c_[k] + o.c_[k];
    return r;
}

Jet1 Jet1::operator-(const Jet1& o) const {
    Jet1 r(std::min(order(), o.order()));
    for (int k = 0; k <= r.order(); ++k) r.c_[k] = c_[k] - o.c_[k];
    return r;
}

Jet1 Jet1::operator*(const Jet1& o) const {
    int n = std::min(order(), o.order());
    Jet1 r(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; i + j <= n && j <= o.order(); ++j)
            r.c_[i + j] += c_[i] * o.c_[j];
    return r;
}

Jet1 Jet1::operator/(const Jet1& o) const { return *this * reciprocal(o); }

Jet1 Jet1::operator+(double t) const {
    Jet1 r = *this;
    r.c_[0] += t;
    return r;
}
Jet1 Jet1::operator-(double t) const { return *this + (-t); }
Jet1 Jet1::operator*(double t) const {
    Jet1 r = *this;
    for (auto& x : r.c_) x *= t;
    return r;
}
Jet1 Jet1::operator-() const { return *this * -1.0; }

double Jet1::eval(double dx) const {
    double r = 0;
    for (int k = order(); k >= 0; --k) r = r * dx + c_[k];
    return r;
}

Jet1 reciprocal(const Jet1& x) {
    int n = x.order();
    Jet1 r(n);
    if (x.c_[0] == 0.0) throw std::runtime_error("Jet1: reciprocal of zero constant term");
    r.c_[0] = 1.0 / x.c_[0];
    for (int k = 1; k <= n; ++k) {
        double s = 0;
        for (int j = 1; j <= k; ++j) s += x.c_[j] * r.c_[k - j];
        r.c_[k] = -s / x.c_[0];
    }
    return r;
}

Jet1 exp(const Jet1& x) {
    int n = x.order();
    Jet1 r(n);
    r.c_[0] = std::exp(x.c_[0]);
    for (int k = 1; k <= n; ++k) {
        double s = 0;
        for (int j = 1; j <= k; ++j) s += j * x.c_[j] * r.c_[k - j];
        r.c_[k] = s / k;
    }
    return r;
}

Jet1 sqrt(const Jet1& x) {
    int n = x.order();
    Jet1 r(n);
    r.c_[0] = std::sqrt(x.c_[0]);
    for (int k = 1; k <= n; ++k) {
        double s = 0;
        for (int j = 1; j <= k - 1; ++j) s += r.c_[j] * r.c_[k - j];
        r.c_[k] = (x.c_[k] - s) / (2.0 * r.c_[0]);
    }
    return r;
}

// sin/cos by the coupled recurrence s' = c x', c' = -s x'.
Jet1 sin(const Jet1& x) {
    int n = x.order();
    Jet1 s(n), c(n);
    s.c_[0] = std::sin(x.c_[0]);
    c.c_[0] = std::cos(x.c_[0]);
    for (int k = 1; k <= n; ++k) {
        double ss = 0, cc = 0;
        for (int j = 1; j <= k; ++j) {
            ss += j * x.c_[j] * c.c_[k - j];
            cc += j * x.c_[j] * s.c_[k - j];
        }
        s.c_[k] = ss / k;
        c.c_[k] = -cc / k;
    }
    return s;
}

Jet1 cos(const Jet1& x) {
    int n = x.order();
    Jet1 s(n), c(n);
    s.c_[0] = std::sin(x.c_[0]);
    c.c_[0] = std::cos(x.c_[0]);
    for (int k = 1; k <= n; ++k) {
        double ss = 0, cc = 0;
        for (int j = 1; j <= k; ++j) {
            ss += j * x.c_[j] * c.c_[k - j];
            cc += j * x.c_[j] * s.c_[k - j];
        }
        s.c_[k] = ss / k;
        c.c_[k] = -cc / k;
    }
    return c;
}

Jet1 compose(const Jet1& f, const Jet1& g) {
    if (std::abs(g[0]) > 1e-300)
        throw std::runtime_error("Jet1: compose requires zero constant inner term");
    int n = std::min(f.order(), g.order());
    // Horner over the truncated series
    Jet1 r(n, f[std::min(f.order(), n)]);
    for (int k = std::min(f.order(), n) - 1; k >= 0; --k) {
        r = r * g.truncated(n);
        r.c_[0] += f[k];
    }
    return r;
}

Jet1 derivative_jet(const Jet1& x) {
    int n = std::max(0, x.order() - 1);
    Jet1 r(n);
    for (int k = 0; k <= n; ++k) r.c_[k] = (k + 1) * x[k + 1];
    return r;
}

Jet1 antiderivative_jet(const Jet1& x) {
    Jet1 r(x.order() + 1);
    for (int k = 0; k <= x.order(); ++k) r.c_[k + 1] = x[k] / (k + 1);
    return r;
}

// ---------------------------------------------------------------- Jet2

Jet2 Jet2::variable_u(int order, double value) {
    Jet2 j(order, value);
    if (order >= 1) j.at(1, 0) = 1.0;
    return j;
}

Jet2 Jet2::variable_v(int order, double value) {
    Jet2 j(order, value);
    if (order >= 1) j.at(0, 1) = 1.0;
    return j;
}

double Jet2::partial(int a, int b) const {
    return coeff(a, b) * factorial(a) * factorial(b);
}

Jet2 Jet2::truncated(int new_order) const {
    Jet2 r(new_order);
    int m = std::min(new_order, order_);
    for (int d = 0; d <= m; ++d)
        for (int b = 0; b <= d; ++b) r.at(d - b, b) = coeff(d - b, b);
    return r;
}

Jet2 Jet2::operator+(const Jet2& o) const {
    int n = std::min(order_, o.order_);
    Jet2 r(n);
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = c_[i] + o.c_[i];
    return r;
}

Jet2 Jet2::operator-(const Jet2& o) const {
    int n = std::min(order_, o.order_);
    Jet2 r(n);
    for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] = c_[i] - o.c_[i];
    return r;
}

Jet2 Jet2::operator*(const Jet2& o) const {
    int n = std::min(order_, o.order_);
    Jet2 r(n);
    for (int d1 = 0; d1 <= n; ++d1)
        for (int b1 = 0; b1 <= d1; ++b1) {
            double x = coeff(d1 - b1, b1);
            if (x == 0.0) continue;
            for (int d2 = 0; d1 + d2 <= n && d2 <= o.order_; ++d2)
                for (int b2 = 0; b2 <= d2; ++b2)
                    r.at(d1 - b1 + d2 - b2, b1 + b2) += x * o.coeff(d2 - b2, b2);
        }
    return r;
}

Jet2 Jet2::operator/(const Jet2& o) const { return *this * reciprocal(o); }

Jet2 Jet2::operator+(double t) const {
    Jet2 r = *this;
    r.c_[0] += t;
    return r;
}
Jet2 Jet2::operator*(double t) const {
    Jet2 r = *this;
    for (auto& x : r.c_) x *= t;
    return r;
}
Jet2 Jet2::operator-() const { return *this * -1.0; }

double Jet2::eval(double du, double dv) const {
    double r = 0;
    for (int d = order_; d >= 0; --d) {
        double layer = 0;
        // sum_{b} coeff(d-b, b) du^{d-b} dv^b
        for (int b = d; b >= 0; --b) layer = layer * 1.0 + coeff(d - b, b) * std::pow(du, d - b) * std::pow(dv, b);
        r += layer;
    }
    return r;
}

Jet2 Jet2::du() const {
    int n = std::max(0, order_ - 1);
    Jet2 r(n);
    for (int d = 0; d <= n; ++d)
        for (int b = 0; b <= d; ++b) r.at(d - b, b) = (d - b + 1) * coeff(d - b + 1, b);
    return r;
}

Jet2 Jet2::dv() const {
    int n = std::max(0, order_ - 1);
    Jet2 r(n);
    for (int d = 0; d <= n; ++d)
        for (int b = 0; b <= d; ++b) r.at(d - b, b) = (b + 1) * coeff(d - b, b + 1);
    return r;
}

double Jet2::max_abs_order(int d) const {
    double m = 0;
    if (d > order_) return 0;
    for (int b = 0; b <= d; ++b) m = std::max(m, std::abs(coeff(d - b, b)));
    return m;
}

namespace {

// generic univariate-recurrence lift: given scalar function applied to the
// constant term and the recurrence via a Jet1 of the outer function, compose.
Jet2 lift(const Jet1& outer_series, const Jet2& x) {
    Jet2 dx = x;
    dx.at(0, 0) = 0.0;
    return compose_univariate(outer_series, dx);
}

Jet1 scalar_series_exp(int n, double x0) {
    return exp(Jet1::variable(n, x0));
}

}  // namespace

Jet2 exp(const Jet2& x) { return lift(scalar_series_exp(x.order(), x.value()), x); }

Jet2 sqrt(const Jet2& x) { return lift(sqrt(Jet1::variable(x.order(), x.value())), x); }

Jet2 sin(const Jet2& x) { return lift(sin(Jet1::variable(x.order(), x.value())), x); }

Jet2 cos(const Jet2& x) { return lift(cos(Jet1::variable(x.order(), x.value())), x); }

Jet2 reciprocal(const Jet2& x) {
    return lift(reciprocal(Jet1::variable(x.order(), x.value())), x);
}

Jet2 compose_univariate(const Jet1& f, const Jet2& g) {
    if (std::abs(g.value()) > 1e-300)
        throw std::runtime_error("Jet2: compose requires zero constant inner term");
    int n = g.order();
    Jet2 r(n, f[std::min(f.order(), n)]);
    for (int k = std::min(f.order(), n) - 1; k >= 0; --k) {
        r = r * g;
        r.at(0, 0) += f[k];
    }
    return r;
}

Jet2 compose_bivariate(const Jet2& f, const Jet2& gu, const Jet2& gv) {
    if (std::abs(gu.value()) > 1e-300 || std::abs(gv.value()) > 1e-300)
        throw std::runtime_error("Jet2: compose requires zero constant inner terms");
    int n = std::min({f.order(), gu.order(), gv.order()});
    // powers of gu and gv up to n
    std::vector<Jet2> pu(n + 1, Jet2(n, 1.0)), pv(n + 1, Jet2(n, 1.0));
    for (int k = 1; k <= n; ++k) {
        pu[k] = pu[k - 1] * gu;
        pv[k] = pv[k - 1] * gv;
    }
    Jet2 r(n, 0.0);
    for (int d = 0; d <= n; ++d)
        for (int b = 0; b <= d; ++b) {
            double cf = f.coeff(d - b, b);
            if (cf == 0.0) continue;
            r = r + pu[d - b] * pv[b] * cf;
        }
    return r;
}

Jet1 compose_with_curve(const Jet2& f, const Jet1& x, const Jet1& y) {
    if (std::abs(x[0]) > 1e-300 || std::abs(y[0]) > 1e-300)
        throw std::runtime_error("compose_with_curve: zero constant terms required");
    int n = std::min({f.order(), x.order(), y.order()});
    std::vector<Jet1> px(n + 1, Jet1(n, 1.0)), py(n + 1, Jet1(n, 1.0));
    for (int k = 1; k <= n; ++k) {
        px[k] = px[k - 1] * x.truncated(n);
        py[k] = py[k - 1] * y.truncated(n);
    }
    Jet1 r(n, 0.0);
    for (int d = 0; d <= n; ++d)
        for (int b = 0; b <= d; ++b) {
            double cf = f.coeff(d - b, b);
            if (cf == 0.0) continue;
            r = r + px[d - b] * py[b] * cf;
        }
    return r;
}

// ---------------------------------------------------------------- JetMap2

JetMap2 JetMap2::identity(int order, const PhasePoint& base) {
    JetMap2 m;
    m.order = order;
    m.base_in = m.base_out = base;
    m.s_out = Jet2::variable_u(order, base.s);
    m.phi_out = Jet2::variable_v(order, base.phi);
    return m;
}

JetMap2 compose_maps(const JetMap2& outer, const JetMap2& inner) {
    if (outer.order != inner.order)
        throw std::runtime_error("compose_maps: order mismatch");
    if (s_distance(inner.base_out.s, outer.base_in.s) > 1e-8 ||
        std::abs(inner.base_out.phi - outer.base_in.phi) > 1e-8)
        throw std::runtime_error("compose_maps: base point mismatch");
    Jet2 ds = inner.s_out;
    ds.at(0, 0) = 0.0;
    Jet2 dphi = inner.phi_out;
    dphi.at(0, 0) = 0.0;
    JetMap2 m;
    m.order = outer.order;
    m.base_in = inner.base_in;
    m.base_out = outer.base_out;
    Jet2 fs = outer.s_out;
    fs.at(0, 0) -= outer.base_out.s;  // expansion relative to its own output base
    Jet2 fphi = outer.phi_out;
    fphi.at(0, 0) -= outer.base_out.phi;
    m.s_out = compose_bivariate(fs, ds, dphi) + outer.base_out.s;
    m.phi_out = compose_bivariate(fphi, ds, dphi) + outer.base_out.phi;
    return m;
}

JetMap2 invert_map(const JetMap2& m) {
    int n = m.order;
    Mat2 A = m.linear();
    Mat2 Ai = A.inverse();
    JetMap2 g;
    g.order = n;
    g.base_in = m.base_out;
    g.base_out = m.base_in;
    // start from the linear inverse, Newton-iterate g <- g - dF^{-1} (F(g) - id)
    Jet2 u = Jet2::variable_u(n, 0.0), v = Jet2::variable_v(n, 0.0);
    Jet2 gs = u * Ai.a + v * Ai.b;
    Jet2 gp = u * Ai.c + v * Ai.d;
    Jet2 fs = m.s_out;
    fs.at(0, 0) -= m.base_out.s;
    Jet2 fp = m.phi_out;
    fp.at(0, 0) -= m.base_out.phi;
    for (int it = 0; it < n + 2; ++it) {
        Jet2 rs = compose_bivariate(fs, gs, gp) - u;
        Jet2 rp = compose_bivariate(fp, gs, gp) - v;
        gs = gs - (rs * Ai.a + rp * Ai.b);
        gp = gp - (rs * Ai.c + rp * Ai.d);
    }
    g.s_out = gs + m.base_in.s;
    g.phi_out = gp + m.base_in.phi;
    return g;
}

JetMap2 reversal_conjugate(const JetMap2& m) {
    // R(s, phi) = (s, pi - phi); returns R o m o R expanded at R(base_in).
    int n = m.order;
    JetMap2 r;
    r.order = n;
    r.base_in = {m.base_in.s, M_PI - m.base_in.phi};
    r.base_out = {m.base_out.s, M_PI - m.base_out.phi};
    Jet2 u = Jet2::variable_u(n, 0.0), v = Jet2::variable_v(n, 0.0);
    Jet2 fs = m.s_out;
    fs.at(0, 0) -= m.base_out.s;
    Jet2 fp = m.phi_out;
    fp.at(0, 0) -= m.base_out.phi;
    Jet2 mv = -v;
    Jet2 cs = compose_bivariate(fs, u, mv);
    Jet2 cp = compose_bivariate(fp, u, mv);
    r.s_out = cs + r.base_out.s;
    r.phi_out = -cp + r.base_out.phi;
    return r;
}

}  // namespace bjl
