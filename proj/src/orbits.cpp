#include "bjl/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bjl/linalg.hpp"
#include "json.hpp"

namespace bjl {

namespace {

// reflection-law residual components at each impact of a lifted configuration
// g_i = dL/ds_i = cos(phi_i^-) - cos(phi_i^+)
std::vector<double> length_gradient(const Domain& domain, const std::vector<double>& lifted) {
    int q = static_cast<int>(lifted.size());
    std::vector<double> g(q, 0.0);
    for (int i = 0; i < q; ++i) {
        int j = (i + 1) % q;
        auto gl = generating_length(domain, wrap_unit(lifted[i]), wrap_unit(lifted[j]));
        g[i] += gl.dL_ds0;
        g[j] += gl.dL_ds1;
    }
    return g;
}

double total_length(const Domain& domain, const std::vector<double>& lifted) {
    int q = static_cast<int>(lifted.size());
    double L = 0;
    for (int i = 0; i < q; ++i)
        L += generating_length(domain, wrap_unit(lifted[i]), wrap_unit(lifted[(i + 1) % q])).L;
    return L;
}

Matrix length_hessian(const Domain& domain, const std::vector<double>& lifted) {
    int q = static_cast<int>(lifted.size());
    Matrix H(q, q, 0.0);
    for (int i = 0; i < q; ++i) {
        int j = (i + 1) % q;
        Jet2 L = generating_length_jet(domain, wrap_unit(lifted[i]), wrap_unit(lifted[j]), 2);
        H(i, i) += L.partial(2, 0);
        H(j, j) += L.partial(0, 2);
        H(i, j) += L.partial(1, 1);
        H(j, i) += L.partial(1, 1);
    }
    return H;
}

double max_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool strictly_ordered(const std::vector<double>& lifted, int p) {
    for (std::size_t i = 0; i + 1 < lifted.size(); ++i)
        if (lifted[i + 1] - lifted[i] <= 1e-9) return false;
    return lifted.back() < lifted.front() + p;
}

PhasePoint phase_point_at(const Domain& domain, double s_cur, double s_next) {
    auto b0 = domain.eval_boundary(s_cur, 0);
    auto b1 = domain.eval_boundary(s_next, 0);
    double alpha = std::atan2(b1.position[1] - b0.position[1], b1.position[0] - b0.position[0]);
    double phi = wrap_angle_pm_pi(alpha - b0.theta);
    if (phi <= 0) phi += 2 * M_PI;
    return {wrap_unit(s_cur), phi};
}

PeriodicOrbit orbit_from_configuration(const Domain& domain, const std::vector<double>& lifted,
                                       int p) {
    PeriodicOrbit orbit;
    orbit.q = static_cast<int>(lifted.size());
    orbit.p = p;
    orbit.points.reserve(orbit.q);
    for (int i = 0; i < orbit.q; ++i)
        orbit.points.push_back(phase_point_at(domain, lifted[i], lifted[(i + 1) % orbit.q]));
    orbit.residual = max_abs(length_gradient(domain, lifted));
    return orbit;
}

std::vector<double> newton_iterations(const Domain& domain, std::vector<double> lifted, int p,
                                      bool allow_gauge_fix, double target_residual,
                                      int max_iter = 40) {
    int q = static_cast<int>(lifted.size());
    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> g = length_gradient(domain, lifted);
        if (max_abs(g) < target_residual) return lifted;
        Matrix H = length_hessian(domain, lifted);
        std::vector<double> step;
        bool ok = lu_solve_checked(H, g, step, 1e-11);
        if (!ok) {
            if (!allow_gauge_fix)
                throw OrbitError(OrbitError::Code::singular_jacobian,
                                 "singular Jacobian: degenerate (non-isolated) orbit family");
            // pin the first impact and solve the reduced system
            Matrix Hr(q - 1, q - 1);
            std::vector<double> gr(q - 1);
            for (int i = 1; i < q; ++i) {
                gr[i - 1] = g[i];
                for (int j = 1; j < q; ++j) Hr(i - 1, j - 1) = H(i, j);
            }
            std::vector<double> sr;
            if (!lu_solve_checked(Hr, gr, sr, 1e-11))
                throw OrbitError(OrbitError::Code::singular_jacobian,
                                 "singular Jacobian even with the gauge fixed");
            step.assign(q, 0.0);
            for (int i = 1; i < q; ++i) step[i] = sr[i - 1];
        }
        double scale = 1.0;
        std::vector<double> trial(q);
        for (int back = 0; back < 30; ++back) {
            for (int i = 0; i < q; ++i) trial[i] = lifted[i] - scale * step[i];
            if (strictly_ordered(trial, p)) break;
            scale *= 0.5;
        }
        lifted = trial;
    }
    std::vector<double> g = length_gradient(domain, lifted);
    if (max_abs(g) >= target_residual)
        throw OrbitError(OrbitError::Code::stagnation, "Newton did not reach target residual");
    return lifted;
}

}  // namespace

PeriodicOrbit find_birkhoff_orbit(const Domain& domain, int p, int q, double seed_s0) {
    if (q < 2 || p < 1 || std::gcd(p, q) != 1)
        throw OrbitError(OrbitError::Code::bad_rotation, "need q >= 2 and gcd(p, q) = 1");
    std::vector<double> lifted(q);
    for (int i = 0; i < q; ++i) lifted[i] = seed_s0 + static_cast<double>(p) * i / q;

    // order-preserving gradient ascent toward the length maximizer
    double step = 0.01;
    double L = total_length(domain, lifted);
    for (int it = 0; it < 400; ++it) {
        std::vector<double> g = length_gradient(domain, lifted);
        if (max_abs(g) < 1e-9) break;
        std::vector<double> trial(q);
        bool moved = false;
        for (int back = 0; back < 40; ++back) {
            for (int i = 0; i < q; ++i) trial[i] = lifted[i] + step * g[i];
            if (strictly_ordered(trial, p)) {
                double Lt = total_length(domain, trial);
                if (Lt > L) {
                    lifted = trial;
                    L = Lt;
                    moved = true;
                    step *= 1.3;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    lifted = newton_iterations(domain, lifted, p, /*allow_gauge_fix=*/true, 1e-12);
    if (!strictly_ordered(lifted, p))
        throw OrbitError(OrbitError::Code::degenerate, "configuration lost cyclic order");
    return orbit_from_configuration(domain, lifted, p);
}

PeriodicOrbit orbit_from_seed(const Domain& domain, int p, int q,
                              const std::vector<double>& seed_s) {
    if (static_cast<int>(seed_s.size()) != q)
        throw OrbitError(OrbitError::Code::bad_rotation, "seed length must equal q");
    std::vector<double> lifted = seed_s;
    for (int i = 1; i < q; ++i)
        while (lifted[i] <= lifted[i - 1]) lifted[i] += 1.0;
    std::vector<double> refined =
        newton_iterations(domain, lifted, p, /*allow_gauge_fix=*/true, 1e-12);
    return orbit_from_configuration(domain, refined, p);
}

PeriodicOrbit refine_newton(const Domain& domain, const PeriodicOrbit& orbit,
                            bool allow_gauge_fix, double target_residual) {
    // always rebuild against this domain: cached monodromy/eigen data of the
    // input may belong to a different boundary
    std::vector<double> lifted(orbit.q);
    lifted[0] = orbit.points[0].s;
    for (int i = 1; i < orbit.q; ++i) {
        lifted[i] = orbit.points[i].s;
        while (lifted[i] <= lifted[i - 1]) lifted[i] += 1.0;
    }
    if (max_abs(length_gradient(domain, lifted)) < target_residual)
        return orbit_from_configuration(domain, lifted, orbit.p);
    std::vector<double> refined =
        newton_iterations(domain, lifted, orbit.p, allow_gauge_fix, target_residual, 12);
    return orbit_from_configuration(domain, refined, orbit.p);
}

JetMap2 monodromy(const Domain& domain, const PeriodicOrbit& orbit, int order) {
    if (orbit.residual > 1e-10)
        throw OrbitError(OrbitError::Code::residual_too_large,
                         "refine the orbit before computing its monodromy");
    JetMap2 acc = map_jet(domain, orbit.points[0], order);
    for (int i = 1; i < orbit.q; ++i)
        acc = compose_maps(map_jet(domain, orbit.points[i], order), acc);
    return acc;
}

std::vector<Mat2> step_differentials(const Domain& domain, const PeriodicOrbit& orbit) {
    std::vector<Mat2> out;
    out.reserve(orbit.q);
    for (const auto& p : orbit.points) out.push_back(one_step_differential(domain, p));
    return out;
}

EigenData classify(PeriodicOrbit& orbit, const Domain& domain, double trace_tol) {
    if (!orbit.monodromy_jet) orbit.monodromy_jet = monodromy(domain, orbit, 1);
    Mat2 A = orbit.monodromy_jet->linear();
    EigenData e;
    e.trace = A.trace();
    e.det = A.det();
    double t = e.trace;
    if (std::abs(t) > 2.0 + trace_tol) {
        e.cls = OrbitClass::hyperbolic;
        double disc = std::sqrt(t * t - 4.0 * e.det);
        double l1 = (t + (t > 0 ? disc : -disc)) / 2.0;  // |l1| > 1
        e.lambda = l1;
        e.omega1 = std::atan2(l1 - A.a, A.b);
        e.omega2 = std::atan2(1.0 / l1 - A.a, A.b);
        double v1 = std::abs(wrap_angle_pm_pi(M_PI / 2 - e.omega1));
        double v2 = std::abs(wrap_angle_pm_pi(M_PI / 2 - e.omega2));
        e.min_vertical_angle = std::min(std::min(v1, M_PI - v1), std::min(v2, M_PI - v2));
    } else if (std::abs(t) < 2.0 - trace_tol) {
        e.cls = OrbitClass::elliptic;
        e.rotation_angle = std::acos(t / 2.0);
    } else {
        e.cls = OrbitClass::parabolic;
    }
    orbit.eigen = e;
    return e;
}

Jet2 orbit_length_jet(const Domain& domain, const PeriodicOrbit& orbit, int order) {
    std::vector<JetMap2> prefix;  // jets of f^i at the base point
    prefix.push_back(JetMap2::identity(order, orbit.points[0]));
    for (int i = 0; i < orbit.q; ++i)
        prefix.push_back(compose_maps(map_jet(domain, orbit.points[i], order), prefix.back()));

    Jet2 L(order, 0.0);
    for (int i = 0; i < orbit.q; ++i) {
        double si = orbit.points[i].s;
        double sn = prefix[i + 1].base_out.s;
        Jet2 lj = generating_length_jet(domain, si, sn, order);
        Jet2 dsi = prefix[i].s_out;
        dsi.at(0, 0) = 0.0;
        Jet2 dsn = prefix[i + 1].s_out;
        dsn.at(0, 0) = 0.0;
        L = L + compose_bivariate(lj, dsi, dsn);
    }
    return L;
}

AbsolutePeriodicityReport check_absolute_periodicity_order(const Domain& domain,
                                                           const PeriodicOrbit& orbit, int n,
                                                           double tol) {
    JetMap2 mono = (orbit.monodromy_jet && orbit.monodromy_jet->order >= std::max(n, 1))
                       ? *orbit.monodromy_jet
                       : monodromy(domain, orbit, std::max(n, 1));
    JetMap2 id = JetMap2::identity(mono.order, mono.base_in);

    AbsolutePeriodicityReport rep;
    int k = 0;
    double defect = 0;
    while (k < n) {
        defect = 0;
        for (int b = 0; b <= k + 1; ++b) {
            defect = std::max(defect, std::abs(mono.s_out.coeff(k + 1 - b, b) -
                                               id.s_out.coeff(k + 1 - b, b)));
            defect = std::max(defect, std::abs(mono.phi_out.coeff(k + 1 - b, b) -
                                               id.phi_out.coeff(k + 1 - b, b)));
        }
        if (defect > tol) break;
        ++k;
    }
    rep.order = (k == 0 && defect > tol) ? -1 : k;
    rep.jet_identity_defect = defect;

    Jet2 L = orbit_length_jet(domain, orbit, std::max(1, std::min(n, 4)));
    double phi0 = orbit.points[0].phi;
    double phi_q = mono.base_out.phi;
    double ds_ds0 = mono.s_out.partial(1, 0);
    double ds_dphi0 = mono.s_out.partial(0, 1);
    rep.dL_ds0_identity_error =
        std::abs(L.partial(1, 0) - (std::cos(phi_q) * ds_ds0 - std::cos(phi0)));
    rep.dL_dphi0_identity_error = std::abs(L.partial(0, 1) - std::cos(phi_q) * ds_dphi0);

    double maxL = 0;
    for (int d = 1; d <= std::min(rep.order, L.order()); ++d)
        maxL = std::max(maxL, L.max_abs_order(d));
    rep.max_low_order_L_partial = maxL;
    return rep;
}

std::string orbit_to_json_text(const PeriodicOrbit& orbit) {
    nlohmann::json j;
    j["q"] = orbit.q;
    j["p"] = orbit.p;
    j["residual"] = orbit.residual;
    j["points"] = nlohmann::json::array();
    for (const auto& pt : orbit.points) j["points"].push_back({{"s", pt.s}, {"phi", pt.phi}});
    if (orbit.eigen) {
        const auto& e = *orbit.eigen;
        j["classification"] = e.cls == OrbitClass::hyperbolic  ? "hyperbolic"
                              : e.cls == OrbitClass::elliptic ? "elliptic"
                                                              : "parabolic";
        j["trace"] = e.trace;
        j["det"] = e.det;
        if (e.cls == OrbitClass::hyperbolic) {
            j["lambda"] = e.lambda;
            j["omega1"] = e.omega1;
            j["omega2"] = e.omega2;
        }
        if (e.cls == OrbitClass::elliptic) j["rotation_angle"] = e.rotation_angle;
    }
    return j.dump(2);
}

PeriodicOrbit orbit_from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PeriodicOrbit o;
    o.q = j.at("q").get<int>();
    o.p = j.at("p").get<int>();
    o.residual = j.value("residual", 0.0);
    for (const auto& pt : j.at("points"))
        o.points.push_back({pt.at("s").get<double>(), pt.at("phi").get<double>()});
    return o;
}

}  // namespace bjl
