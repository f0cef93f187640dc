#include "bjl/normal_form.hpp"

#include <cmath>

#include "bjl/manifolds.hpp"

namespace bjl {

JetMap2 mirror_coordinates_jet(const JetMap2& jet) {
    // C(s, phi) = (s, -cos phi); returns C o F o C^{-1} expanded at C(base_in)
    int n = jet.order;
    double phi_in = jet.base_in.phi, phi_out = jet.base_out.phi;
    JetMap2 out;
    out.order = n;
    out.base_in = {jet.base_in.s, -std::cos(phi_in)};
    out.base_out = {jet.base_out.s, -std::cos(phi_out)};

    // phi as a function of r = -cos(phi): dphi = dr / sin(phi)
    // build the Jet1 of phi(r) at r_in by series inversion of r(phi)
    Jet1 phi_var = Jet1::variable(n, phi_in);
    Jet1 r_of_phi = -cos(phi_var);  // r(phi)
    // invert: phi(r) with phi(r_in) = phi_in; Newton in jet space
    Jet1 rv = Jet1::variable(n, r_of_phi[0]);
    Jet1 phi_of_r(n, phi_in);
    for (int it = 0; it < n + 2; ++it) {
        Jet1 dphi = phi_of_r - phi_in;
        Jet1 resid = compose(r_of_phi - r_of_phi[0], dphi) + r_of_phi[0] - rv;
        // zero-pad the derivative so the quotient keeps full order
        Jet1 deriv = compose(derivative_jet(r_of_phi).truncated(n), dphi);
        phi_of_r = phi_of_r - resid / deriv;
        phi_of_r.at(0) = phi_in;
    }

    Jet2 u = Jet2::variable_u(n, 0.0);
    Jet2 w = Jet2::variable_v(n, 0.0);  // offset of r
    Jet2 dphi_in = compose_univariate(phi_of_r - phi_in, w);  // phi offset as jet of (u, w)

    Jet2 fs = jet.s_out, fp = jet.phi_out;
    fs.at(0, 0) -= jet.base_out.s;
    fp.at(0, 0) -= jet.base_out.phi;
    Jet2 s_new = compose_bivariate(fs, u, dphi_in) + jet.base_out.s;
    Jet2 phi_new = compose_bivariate(fp, u, dphi_in) + phi_out;  // absolute phi_out jet

    // r_out = -cos(phi_new)
    Jet1 cos_out = -cos(Jet1::variable(n, phi_out));
    Jet2 dphi_out = phi_new;
    dphi_out.at(0, 0) = 0.0;
    Jet2 r_new = compose_univariate(cos_out - cos_out[0], dphi_out) + cos_out[0];

    out.s_out = s_new;
    out.phi_out = r_new;
    return out;
}

BirkhoffNormalForm birkhoff_normal_form_from_jet(const JetMap2& jet, int K) {
    int need = 2 * K + 1;
    if (jet.order < need)
        throw std::runtime_error("normal form needs a jet of order 2K+1");
    Mat2 A = jet.linear();
    double tr = A.trace();
    if (std::abs(tr) <= 2.0) throw std::runtime_error("normal form needs a saddle");
    double disc = std::sqrt(tr * tr - 4 * A.det());
    double lam = (tr + (tr > 0 ? disc : -disc)) / 2.0;
    if (lam <= 1.0) throw std::runtime_error("orientation-reversing saddle not supported");

    // eigenbasis E = [v_u v_s]; work in centered eigen coordinates
    std::array<double, 2> vu{A.b, lam - A.a}, vs{A.b, 1.0 / lam - A.a};
    if (std::hypot(vu[0], vu[1]) < 1e-13) vu = {lam - A.d, A.c};
    if (std::hypot(vs[0], vs[1]) < 1e-13) vs = {1.0 / lam - A.d, A.c};
    double nu = std::hypot(vu[0], vu[1]), ns = std::hypot(vs[0], vs[1]);
    vu = {vu[0] / nu, vu[1] / nu};
    vs = {vs[0] / ns, vs[1] / ns};
    // fix the branch orientation: flipping one eigenvector would send
    // a_k -> (-1)^k a_k, so pin det(E) > 0
    if (vu[0] * vs[1] - vu[1] * vs[0] < 0) vs = {-vs[0], -vs[1]};
    Mat2 E{vu[0], vs[0], vu[1], vs[1]};
    Mat2 Ei = E.inverse();

    int n = need;
    Jet2 xi = Jet2::variable_u(n, 0.0), eta = Jet2::variable_v(n, 0.0);
    // centered map in eigen coordinates: G = Ei (F(base + E z) - F(base))
    Jet2 du = xi * E.a + eta * E.b;
    Jet2 dv = xi * E.c + eta * E.d;
    Jet2 fs = jet.s_out.truncated(n), fp = jet.phi_out.truncated(n);
    fs.at(0, 0) = 0.0;
    fp.at(0, 0) = 0.0;
    Jet2 Fu = compose_bivariate(fs, du, dv);
    Jet2 Fv = compose_bivariate(fp, du, dv);
    Jet2 G1 = Fu * Ei.a + Fv * Ei.b;
    Jet2 G2 = Fu * Ei.c + Fv * Ei.d;

    // conjugation H = id + h solved degree by degree from H o G = T o H
    Jet2 H1 = xi, H2 = eta;
    std::vector<double> a(K, 0.0);

    auto build_T = [&](const Jet2& x, const Jet2& y) {
        // T1 = D(xy) x, T2 = x y / (D(xy) x) ... use series: T2 = D(xy)^{-1} y
        Jet2 w = x * y;
        Jet1 D(n, lam);
        for (int k = 1; k <= K; ++k) D.at(k) = a[k - 1];
        Jet2 Dw = compose_univariate(D, w);
        Jet2 Dinv = reciprocal(Dw);
        return std::pair<Jet2, Jet2>{Dw * x, Dinv * y};
    };

    for (int d = 2; d <= n; ++d) {
        Jet2 HG1 = compose_bivariate(H1, G1, G2);
        Jet2 HG2 = compose_bivariate(H2, G1, G2);
        auto [T1, T2] = build_T(H1, H2);
        // residual at degree d with the degree-d unknowns currently zero
        for (int b = 0; b <= d; ++b) {
            int aexp = d - b;
            double r1 = HG1.coeff(aexp, b) - T1.coeff(aexp, b);
            double r2 = HG2.coeff(aexp, b) - T2.coeff(aexp, b);
            double mu1 = std::pow(lam, aexp - b) - lam;       // coefficient of h1_ab
            double mu2 = std::pow(lam, aexp - b) - 1.0 / lam; // coefficient of h2_ab
            if (aexp == b + 1) {
                // resonant in component 1: absorbed by a_m, m = b
                if (b >= 1 && b <= K) a[b - 1] += r1;  // T1 gains a_m (xi eta)^m xi
                if (std::abs(mu2) > 1e-9) H2.at(aexp, b) -= r2 / mu2;
            } else if (b == aexp + 1) {
                // resonant in component 2: forced by the same a_m (area preservation)
                if (std::abs(mu1) > 1e-9) H1.at(aexp, b) -= r1 / mu1;
            } else {
                if (std::abs(mu1) > 1e-9) H1.at(aexp, b) -= r1 / mu1;
                if (std::abs(mu2) > 1e-9) H2.at(aexp, b) -= r2 / mu2;
            }
        }
    }

    BirkhoffNormalForm nf;
    nf.lambda = lam;
    nf.a = a;
    Jet2 HG1 = compose_bivariate(H1, G1, G2);
    Jet2 HG2 = compose_bivariate(H2, G1, G2);
    auto [T1, T2] = build_T(H1, H2);
    Jet2 R1 = HG1 - T1, R2 = HG2 - T2;
    double resid = 0;
    for (int d = 0; d <= n; ++d)
        resid = std::max({resid, R1.max_abs_order(d), R2.max_abs_order(d)});
    nf.conjugacy_residual = resid;
    return nf;
}

BirkhoffNormalForm birkhoff_normal_form(const Domain& domain, const PeriodicOrbit& orbit, int K) {
    JetMap2 mono = monodromy(domain, orbit, 2 * K + 1);
    return birkhoff_normal_form_from_jet(mirror_coordinates_jet(mono), K);
}

}  // namespace bjl
