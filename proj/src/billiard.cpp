#include "bjl/billiard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bjl {

namespace {

struct BoundaryEval {
    double theta;
    std::array<double, 2> pos;
};

BoundaryEval boundary_at(const Domain& d, double s) {
    double theta = d.theta_of_s(s);
    return {theta, d.position_of_theta(theta)};
}

// direction angle of the chord from p0 to the boundary point at s
double chord_direction(const Domain& d, const std::array<double, 2>& p0, double s) {
    auto b = boundary_at(d, s);
    return std::atan2(b.pos[1] - p0[1], b.pos[0] - p0[0]);
}

void check_phi(double phi, double phi_min) {
    if (!(phi > phi_min && phi < M_PI - phi_min))
        throw BilliardError(BilliardError::Code::grazing,
                            "phase point too close to grazing");
}

}  // namespace

PhasePoint next_hit(const Domain& domain, const PhasePoint& p, double phi_min) {
    check_phi(p.phi, phi_min);
    double s0 = wrap_unit(p.s);
    auto b0 = boundary_at(domain, s0);
    double alpha = b0.theta + p.phi;

    // residual is monotone increasing in the step ds within (0, 1)
    auto residual = [&](double ds) {
        return wrap_angle_pm_pi(chord_direction(domain, b0.pos, s0 + ds) - alpha);
    };

    const int scan = 64;
    double lo = 0.0, hi = 0.0, flo = 0.0, fhi = 0.0;
    double prev_ds = 1e-7, prev_f = residual(prev_ds);
    if (prev_f >= 0.0) {
        // extremely short step: bracket near zero
        lo = 1e-12;
        flo = residual(lo);
        hi = prev_ds;
        fhi = prev_f;
    } else {
        bool found = false;
        for (int i = 1; i <= scan; ++i) {
            double ds = static_cast<double>(i) / (scan + 1);
            double f = residual(ds);
            if (f >= 0.0) {
                lo = prev_ds;
                flo = prev_f;
                hi = ds;
                fhi = f;
                found = true;
                break;
            }
            prev_ds = ds;
            prev_f = f;
        }
        if (!found) {
            lo = prev_ds;
            flo = prev_f;
            hi = 1.0 - 1e-9;
            fhi = residual(hi);
            if (fhi < 0.0)
                throw BilliardError(BilliardError::Code::no_convergence,
                                    "next_hit: failed to bracket the forward intersection");
        }
    }

    // bisection/secant hybrid
    for (int it = 0; it < 200 && (hi - lo) > 1e-15; ++it) {
        double mid;
        if (fhi != flo) {
            mid = lo - flo * (hi - lo) / (fhi - flo);
            if (!(mid > lo + 0.1 * (hi - lo) && mid < hi - 0.1 * (hi - lo)))
                mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        double f = residual(mid);
        if (f < 0.0) {
            lo = mid;
            flo = f;
        } else {
            hi = mid;
            fhi = f;
        }
    }
    double ds = 0.5 * (lo + hi);
    double s1 = wrap_unit(s0 + ds);
    auto b1 = boundary_at(domain, s1);
    double phi1 = wrap_angle_pm_pi(b1.theta - alpha);
    if (phi1 <= 0.0) phi1 += 2.0 * M_PI;
    if (phi1 >= M_PI) phi1 = wrap_angle_pm_pi(phi1);  // numerical safety only
    return {s1, phi1};
}

PhasePoint billiard_inverse(const Domain& domain, const PhasePoint& p, double phi_min) {
    PhasePoint rev{p.s, M_PI - p.phi};
    PhasePoint q = next_hit(domain, rev, phi_min);
    return {q.s, M_PI - q.phi};
}

PhasePoint iterate(const Domain& domain, PhasePoint p, int steps, double phi_min) {
    for (int i = 0; i < steps; ++i) p = next_hit(domain, p, phi_min);
    for (int i = 0; i > steps; --i) p = billiard_inverse(domain, p, phi_min);
    return p;
}

ChordData chord_data(const Domain& domain, const PhasePoint& p) {
    PhasePoint q = next_hit(domain, p);
    auto bp0 = domain.eval_boundary(p.s, 0);
    auto bp1 = domain.eval_boundary(q.s, 0);
    ChordData c;
    c.l = std::hypot(bp1.position[0] - bp0.position[0], bp1.position[1] - bp0.position[1]);
    c.beta_in = std::sin(p.phi);
    c.beta_out = std::sin(q.phi);
    c.kappa_in = bp0.curvature_jet[0];
    c.kappa_out = bp1.curvature_jet[0];
    return c;
}

Mat2 one_step_differential(const Domain& domain, const PhasePoint& p) {
    check_phi(p.phi, kGrazingPhiMin);
    ChordData c = chord_data(domain, p);
    double l = c.l, b0 = c.beta_in, b1 = c.beta_out, k0 = c.kappa_in, k1 = c.kappa_out;
    return {(k0 * l - b0) / b1, l / b1,
            (k0 * k1 * l - k0 * b1 - k1 * b0) / b1, (k1 * l - b1) / b1};
}

JetMap2 map_jet(const Domain& domain, const PhasePoint& p, int order) {
    if (order > kMaxMapJetOrder)
        throw BilliardError(BilliardError::Code::order_too_large, "map jet order too large");
    check_phi(p.phi, kGrazingPhiMin);
    PhasePoint q = next_hit(domain, p);

    auto j0 = domain.boundary_jets(p.s, order);
    auto j1 = domain.boundary_jets(q.s, order);

    Jet2 u = Jet2::variable_u(order, 0.0);
    Jet2 v = Jet2::variable_v(order, 0.0);

    Jet2 theta0 = compose_univariate(j0.theta, u);
    Jet2 x0 = compose_univariate(j0.x, u);
    Jet2 y0 = compose_univariate(j0.y, u);
    Jet2 A = theta0 + v + p.phi;  // outgoing direction angle
    Jet2 cosA = cos(A), sinA = sin(A);

    Jet1 x1p = derivative_jet(j1.x), y1p = derivative_jet(j1.y);

    // solve E(S) = (y1(S) - y0) cos A - (x1(S) - x0) sin A = 0 by jet Newton
    Mat2 lin = one_step_differential(domain, p);
    Jet2 S = u * lin.a + v * lin.b;
    for (int it = 0; it < order + 2; ++it) {
        Jet2 x1 = compose_univariate(j1.x, S);
        Jet2 y1 = compose_univariate(j1.y, S);
        Jet2 E = (y1 - y0) * cosA - (x1 - x0) * sinA;
        Jet2 dE = compose_univariate(y1p, S) * cosA - compose_univariate(x1p, S) * sinA;
        S = S - E / dE;
        S.at(0, 0) = 0.0;  // base stays exact
    }

    Jet2 phi1 = compose_univariate(j1.theta, S) - A;
    double branch = q.phi - phi1.value();
    phi1.at(0, 0) += branch;  // 2*pi branch alignment

    JetMap2 m;
    m.order = order;
    m.base_in = {wrap_unit(p.s), p.phi};
    m.base_out = q;
    m.s_out = S + q.s;
    m.phi_out = phi1;
    return m;
}

JetMap2 iterate_jet(const Domain& domain, const PhasePoint& p, int steps, int order) {
    JetMap2 acc = map_jet(domain, p, order);
    PhasePoint cur = acc.base_out;
    for (int i = 1; i < steps; ++i) {
        JetMap2 step = map_jet(domain, cur, order);
        acc = compose_maps(step, acc);
        cur = acc.base_out;
    }
    return acc;
}

GeneratingLength generating_length(const Domain& domain, double s0, double s1) {
    if (s_distance(s0, s1) < 1e-12)
        throw BilliardError(BilliardError::Code::coincident_points,
                            "generating length needs distinct points");
    auto b0 = boundary_at(domain, s0);
    auto b1 = boundary_at(domain, s1);
    double dx = b1.pos[0] - b0.pos[0], dy = b1.pos[1] - b0.pos[1];
    GeneratingLength g;
    g.L = std::hypot(dx, dy);
    g.dL_ds0 = -(dx * std::cos(b0.theta) + dy * std::sin(b0.theta)) / g.L;
    g.dL_ds1 = (dx * std::cos(b1.theta) + dy * std::sin(b1.theta)) / g.L;
    return g;
}

Jet2 generating_length_jet(const Domain& domain, double s0, double s1, int order) {
    if (s_distance(s0, s1) < 1e-12)
        throw BilliardError(BilliardError::Code::coincident_points,
                            "generating length needs distinct points");
    auto j0 = domain.boundary_jets(s0, order);
    auto j1 = domain.boundary_jets(s1, order);
    Jet2 u = Jet2::variable_u(order, 0.0);
    Jet2 v = Jet2::variable_v(order, 0.0);
    Jet2 dx = compose_univariate(j1.x, v) - compose_univariate(j0.x, u);
    Jet2 dy = compose_univariate(j1.y, v) - compose_univariate(j0.y, u);
    return sqrt(dx * dx + dy * dy);
}

std::string orbit_csv(const Domain& domain, const std::vector<PhasePoint>& points) {
    std::ostringstream out;
    out.precision(17);
    out << "s,phi,x,y,kappa\n";
    for (const auto& p : points) {
        auto bp = domain.eval_boundary(p.s, 0);
        out << p.s << "," << p.phi << "," << bp.position[0] << "," << bp.position[1] << ","
            << bp.curvature_jet[0] << "\n";
    }
    return out.str();
}

}  // namespace bjl
