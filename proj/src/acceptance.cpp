#include "bjl/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include "bjl/lazutkin.hpp"
#include "bjl/manifolds.hpp"
#include "bjl/normal_form.hpp"
#include "bjl/perturb.hpp"

namespace bjl {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[FAIL " << what << "] ";
        }
    }
    template <typename T>
    Check& operator<<(const T& v) {
        detail << v;
        return *this;
    }
};

// O(h^4) central-difference stencils for derivatives up to order 4
const std::vector<std::pair<int, double>>& fd_stencil(int order) {
    static const std::vector<std::vector<std::pair<int, double>>> table = {
        {{0, 1.0}},
        {{-2, 1.0 / 12}, {-1, -2.0 / 3}, {1, 2.0 / 3}, {2, -1.0 / 12}},
        {{-2, -1.0 / 12}, {-1, 4.0 / 3}, {0, -5.0 / 2}, {1, 4.0 / 3}, {2, -1.0 / 12}},
        {{-3, 1.0 / 8}, {-2, -1.0}, {-1, 13.0 / 8}, {1, -13.0 / 8}, {2, 1.0}, {3, -1.0 / 8}},
        {{-3, -1.0 / 6},
         {-2, 2.0},
         {-1, -13.0 / 2},
         {0, 28.0 / 3},
         {1, -13.0 / 2},
         {2, 2.0},
         {3, -1.0 / 6}}};
    return table.at(order);
}

// tensor-product high-order stencil; Richardson-extrapolated step sweep with
// a plateau search. Returns the estimate and the plateau's own resolution.
struct FdEstimate {
    double value = 0;
    double resolution = 0;  // gap of the chosen plateau pair
};

FdEstimate fd_plateau(const std::function<std::array<double, 2>(double, double)>& f, double s,
                      double phi, int a, int b, int comp) {
    const auto& sa = fd_stencil(a);
    const auto& sb = fd_stencil(b);
    auto estimate = [&](double h) {
        double acc = 0.0;
        for (const auto& [ia, wa] : sa)
            for (const auto& [ib, wb] : sb) acc += wa * wb * f(s + ia * h, phi + ib * h)[comp];
        return acc / std::pow(h, a + b);
    };
    const double r = 1.6;
    std::vector<double> est;
    for (double h = 4e-2; h >= 5e-4; h /= r) est.push_back(estimate(h));
    // Richardson step: stencils are O(h^4)
    std::vector<double> rich;
    double r4 = std::pow(r, 4);
    for (std::size_t k = 0; k + 1 < est.size(); ++k)
        rich.push_back((r4 * est[k + 1] - est[k]) / (r4 - 1.0));
    FdEstimate out;
    double best_gap = 1e300;
    for (std::size_t k = 0; k + 1 < rich.size(); ++k) {
        double gap = std::abs(rich[k] - rich[k + 1]);
        if (gap < best_gap) {
            best_gap = gap;
            out.value = 0.5 * (rich[k] + rich[k + 1]);
            out.resolution = gap;
        }
    }
    return out;
}

RadiusProfile perturbed_circle_profile() {
    RadiusProfile p = circle_profile();
    p.harmonics.push_back({3, 0.01 / (2 * M_PI), 0.0});
    p.harmonics.push_back({4, 0.005 / (2 * M_PI), 0.0});
    return p;
}

RadiusProfile random_harmonics_profile(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-0.01, 0.01);
    RadiusProfile p = circle_profile();
    for (int k = 2; k <= 6; ++k) p.harmonics.push_back({k, amp(rng) / (2 * M_PI), amp(rng) / (2 * M_PI)});
    return p;
}

RadiusProfile bump_domain_profile() {
    Domain base(ellipse_like_profile(0.1));
    RadiusProfile p = base.profile();
    p.bumps.push_back(make_bump(base, 0.1, {2e-3}, 0.2));
    return p;
}

PeriodicOrbit hyperbolic_two_orbit(const Domain& d) {
    PeriodicOrbit a = find_birkhoff_orbit(d, 1, 2, 0.0);
    PeriodicOrbit b = orbit_from_seed(d, 1, 2, {0.25, 0.75});
    PeriodicOrbit hyp = classify(a, d).cls == OrbitClass::hyperbolic ? a : b;
    classify(hyp, d);
    return hyp;
}

// ---------------------------------------------------------------- criteria

CriterionResult c1_circle_suite() {
    Check c;
    Domain d(circle_profile());
    for (int i = 0; i < 25; ++i) {
        double s = 0.04 * i;
        double phi = 0.15 + (M_PI - 0.3) * i / 24.0;
        PhasePoint got = next_hit(d, {s, phi});
        c.require(s_distance(got.s, s + phi / M_PI) < 1e-10, "circle next_hit s");
        c.require(std::abs(got.phi - phi) < 1e-10, "circle next_hit phi");
    }
    Mat2 df = one_step_differential(d, {0.3, 1.1});
    c.require(std::abs(df.a - 1.0) < 1e-10 && std::abs(df.b - 1.0 / M_PI) < 1e-10 &&
                  std::abs(df.c) < 1e-10 && std::abs(df.d - 1.0) < 1e-10,
              "circle one-step differential");
    auto g = generating_length(d, 0.0, 0.5);
    c.require(std::abs(g.L - 1.0 / M_PI) < 1e-10, "L(0, 1/2) = 1/pi");
    for (int q : {2, 3, 4, 8}) {
        PeriodicOrbit o = find_birkhoff_orbit(d, 1, q);
        double total = 0;
        for (int i = 0; i < q; ++i) {
            c.require(std::abs(o.points[i].phi - M_PI / q) < 1e-10, "polygon angle");
            c.require(s_distance(o.points[(i + 1) % q].s, o.points[i].s + 1.0 / q) < 1e-10,
                      "polygon spacing");
            total += generating_length(d, o.points[i].s, o.points[(i + 1) % q].s).L;
        }
        double expect = q * std::sin(M_PI / q) / M_PI;
        c.require(std::abs(total - expect) < 1e-10, "polygon length");
    }
    c << "map, differential, lengths and q in {2,3,4,8} polygons within 1e-10";
    return {1, "circle oracle suite", c.pass, c.detail.str()};
}

CriterionResult c2_area_twist() {
    Check c;
    std::vector<RadiusProfile> profiles = {circle_profile(), ellipse_like_profile(0.3),
                                           perturbed_circle_profile(), bump_domain_profile(),
                                           random_harmonics_profile(2024)};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> us(0.0, 1.0), uphi(0.12, M_PI - 0.12);
    double worst_det = 0, worst_twist = 1e300;
    for (const auto& prof : profiles) {
        Domain d(prof);
        for (int i = 0; i < 2000; ++i) {
            PhasePoint p{us(rng), uphi(rng)};
            PhasePoint q = next_hit(d, p);
            Mat2 df = one_step_differential(d, p);
            worst_det = std::max(worst_det,
                                 std::abs(df.det() - std::sin(p.phi) / std::sin(q.phi)));
            worst_twist = std::min(worst_twist, df.b);
        }
    }
    c.require(worst_det < 1e-11, "area preservation");
    c.require(worst_twist > 0.0, "twist positivity");
    c << "10^4 points on 5 domains: max |det df - sin ratio| = " << worst_det
      << " (tol 1e-11), min twist = " << worst_twist << " > 0";
    return {2, "area preservation and twist", c.pass, c.detail.str()};
}

CriterionResult c3_jets_vs_fd() {
    Check c;
    std::vector<RadiusProfile> profiles = {circle_profile(), ellipse_like_profile(0.3),
                                           perturbed_circle_profile()};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(0.0, 1.0), uphi(0.5, M_PI - 0.5);
    double worst_rel = 0;
    for (const auto& prof : profiles) {
        Domain d(prof);
        auto lifted = [&](double s, double phi) {
            PhasePoint q = next_hit(d, {wrap_unit(s), phi});
            double ds = q.s - wrap_unit(s);
            if (ds < 0) ds += 1.0;
            return std::array<double, 2>{s + ds, q.phi};
        };
        for (int pt = 0; pt < 10; ++pt) {
            PhasePoint p{us(rng), uphi(rng)};
            JetMap2 jet = map_jet(d, p, 4);
            for (int a = 0; a <= 4; ++a)
                for (int b = 0; a + b <= 4; ++b) {
                    if (a + b == 0) continue;
                    for (int comp = 0; comp < 2; ++comp) {
                        double jv = comp == 0 ? jet.partial_s(a, b) : jet.partial_phi(a, b);
                        FdEstimate fd = fd_plateau(lifted, p.s, p.phi, a, b, comp);
                        if (std::abs(jv) < 1e-5 && std::abs(fd.value) < 1e-3)
                            continue;  // joint zero, below the oracle's resolution
                        double scale = std::max(std::abs(jv), std::abs(fd.value));
                        // agreement within relative 1e-4, never asking the
                        // oracle for more than its own plateau resolves
                        double allowed = std::max(1e-4 * scale, 3.0 * fd.resolution);
                        double rel = std::abs(jv - fd.value) / scale;
                        if (std::abs(jv - fd.value) > allowed)
                            worst_rel = std::max(worst_rel, rel);
                    }
                }
        }
    }
    c.require(worst_rel < 1e-4, "jet vs finite differences");
    c << "3 domains x 10 points, all orders <= 4: worst unexplained relative deviation "
      << worst_rel << " (tol 1e-4; plateau resolution honored)";
    return {3, "jet coefficients against finite-difference plateaus", c.pass, c.detail.str()};
}

CriterionResult c4_slope_law() {
    Check c;
    struct Case {
        RadiusProfile prof;
        int p, q, k;
    };
    std::vector<Case> cases = {{ellipse_like_profile(0.3), 1, 3, 2},
                               {ellipse_like_profile(0.15), 1, 5, 3},
                               {perturbed_circle_profile(), 1, 4, 1}};
    for (const auto& cs : cases) {
        Domain d(cs.prof);
        PeriodicOrbit o = find_birkhoff_orbit(d, cs.p, cs.q);
        SegmentPartials seg = SegmentPartials::from_orbit(d, o, cs.q);
        Mat2 D1 = predict_delta_differential(seg, cs.k, 1.0);
        JetMap2 mono0 = monodromy(d, o, 1);
        std::vector<double> errs;
        for (double eps : {1e-3, 1e-4, 1e-5}) {
            auto patches = build_bump_patches(d, o, {cs.k}, {eps}, 1);
            Domain dp(merge_patches(d.profile(), patches));
            PeriodicOrbit op = refine_newton(dp, o, true, 1e-12);
            JetMap2 mono = monodromy(dp, op, 1);
            Mat2 measured = (mono.linear() - mono0.linear()) * (1.0 / eps);
            errs.push_back((measured - D1).max_abs());
        }
        // first order in eps: either the error ratios track the sweep, or the
        // response is exact and the errors sit at the numerical floor
        bool ratios_ok = true;
        for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
            double r = errs[i] / std::max(errs[i + 1], 1e-300);
            if (!(r > 6.0 && r < 14.0)) ratios_ok = false;
        }
        bool floor_ok = *std::max_element(errs.begin(), errs.end()) < 1e-7;
        c.require(ratios_ok || floor_ok, "slope law");
        c << "q=" << cs.q << " k=" << cs.k << " errs(1e-3,1e-4,1e-5)=" << errs[0] << ","
          << errs[1] << "," << errs[2] << (floor_ok ? " [exact-linear floor]" : " [ratio]")
          << "; ";
    }
    return {4, "first-order response slope law", c.pass, c.detail.str()};
}

CriterionResult c5_reduction_certificates() {
    Check c;
    struct Cfg {
        RadiusProfile prof;
        PhasePoint start;
    };
    std::vector<Cfg> cfgs = {{ellipse_like_profile(0.3), {0.07, 1.25}},
                             {perturbed_circle_profile(), {0.4, 1.0}},
                             {bump_domain_profile(), {0.62, 1.4}}};
    for (const auto& cfg : cfgs) {
        Domain d(cfg.prof);
        for (int n : {0, 1, 2}) {
            SegmentPartials seg = SegmentPartials::from_point(d, cfg.start, n + 3);
            ReductionCertificate cert = det_via_reduction(seg, n);
            c.require(cert.pass && std::abs(cert.direct_det) > 0, "certificate");
            c << "n=" << n << " det=" << cert.direct_det << " rel_err=" << cert.det_rel_error
              << " cf_err=" << cert.closed_form_rel_error << "; ";
        }
    }
    return {5, "row-reduction determinant certificates", c.pass, c.detail.str()};
}

CriterionResult c6_independence() {
    Check c;
    // order 0: tangent kicks realized in jet space
    {
        Domain d(ellipse_like_profile(0.2));
        PhasePoint start{0.12, 1.1};
        SegmentPartials seg = SegmentPartials::from_point(d, start, 3);
        MMatrix M = assemble_M(seg, 0);
        JetMap2 base = iterate_jet(d, start, 3, 1);
        double scale = 1e-4;
        for (int slot = 0; slot < 2; ++slot) {
            std::vector<double> target(2, 0.0);
            target[slot] = scale;
            std::vector<double> eps = solve_epsilons_for_target(M, target);
            // apply both kicks sequentially: responses are additive at first order
            JetMap2 k1 = phase_kick_segment_jet(d, start, 3, 1, eps[0], 1);
            // re-kick along the already-kicked trajectory at point 2
            PhasePoint mid1 = iterate(d, start, 1);
            (void)mid1;
            double ds = (k1.base_out.s - base.base_out.s);
            double dphi = (k1.base_out.phi - base.base_out.phi);
            JetMap2 k2 = phase_kick_segment_jet(d, start, 3, 2, eps[1], 1);
            ds += (k2.base_out.s - base.base_out.s);
            dphi += (k2.base_out.phi - base.base_out.phi);
            double got = slot == 0 ? ds : dphi;
            double other = slot == 0 ? dphi : ds;
            c.require(std::abs(got - scale) < 0.1 * scale, "order-0 target");
            c.require(std::abs(other) < 0.1 * scale, "order-0 leakage");
        }
        c << "order 0 via phase kicks: unit targets hit within 10%; ";
    }
    // orders 1 and 2 with real curvature bumps
    Domain d(ellipse_like_profile(0.1));
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 6);
    for (int m : {1, 2}) {
        SegmentPartials seg = SegmentPartials::from_orbit(d, o, o.q);
        std::vector<int> pts;
        for (int i = 0; i < m + 2; ++i)
            pts.push_back(1 + i * (o.q - 2) / (m + 1));
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i] <= pts[i - 1]) pts[i] = pts[i - 1] + 1;
        MMatrix M = assemble_M(seg, m, o.q, pts);
        JetMap2 mono0 = monodromy(d, o, m);
        std::vector<double> f0 = free_partials(mono0, m);
        double scale = 1e-4;
        double worst_leak = 0;
        for (int slot = 0; slot < m + 2; ++slot) {
            std::vector<double> target(m + 2, 0.0);
            target[slot] = scale;
            std::vector<double> eps = solve_epsilons_for_target(M, target);
            auto patches = build_bump_patches(d, o, pts, eps, m);
            Domain dp(merge_patches(d.profile(), patches));
            PeriodicOrbit op = refine_newton(dp, o, true, 1e-12);
            JetMap2 mono = monodromy(dp, op, m);
            std::vector<double> f1 = free_partials(mono, m);
            for (int i = 0; i < m + 2; ++i) {
                double leak = std::abs((f1[i] - f0[i]) - target[i]) / scale;
                worst_leak = std::max(worst_leak, leak);
            }
        }
        c.require(worst_leak < 0.1, "cross leakage");
        c << "order " << m << " worst leakage " << worst_leak << "; ";

        // lower-order protection: drift scales like eps^2
        if (m == 2) {
            std::vector<double> drifts;
            for (double eps_scale : {1e-3, 1e-4}) {
                std::vector<double> eps(m + 2, eps_scale);
                auto patches = build_bump_patches(d, o, pts, eps, m);
                Domain dp(merge_patches(d.profile(), patches));
                PeriodicOrbit op = refine_newton(dp, o, true, 1e-12);
                JetMap2 mono = monodromy(dp, op, m);
                double drift = (mono.linear() - mono0.linear()).max_abs();
                drifts.push_back(drift);
            }
            double ratio = drifts[0] / std::max(drifts[1], 1e-300);
            bool quad = ratio > 50 && ratio < 200;
            bool floor = drifts[0] < 1e-9;
            c.require(quad || floor, "lower-order O(eps^2)");
            c << "order-1 drift ratio " << ratio << (floor ? " [floor]" : "") << "; ";
        }
    }
    return {6, "independent control of the free jet coefficients", c.pass, c.detail.str()};
}

CriterionResult c7_recovery() {
    Check c;
    std::vector<RadiusProfile> profiles = {ellipse_like_profile(0.3), perturbed_circle_profile(),
                                           random_harmonics_profile(7)};
    double worst = 0;
    for (const auto& prof : profiles) {
        Domain d(prof);
        for (int n : {1, 2, 3}) {
            JetMap2 jet = iterate_jet(d, {0.18, 1.15}, n + 3, n);
            std::vector<double> rec = recover_phi_partials(jet, n);
            for (int j = 0; j < n; ++j) {
                double direct = jet.partial_phi(n - j, j);
                double rel = std::abs(rec[j] - direct) / std::max(1.0, std::abs(direct));
                worst = std::max(worst, rel);
            }
        }
    }
    c.require(worst < 1e-7, "phi partial recovery");
    c << "n in {1,2,3} on 3 domains: worst relative error " << worst << " (tol 1e-7)";
    return {7, "mixed phi-partial recovery from the area identity", c.pass, c.detail.str()};
}

CriterionResult c8_rotation() {
    Check c;
    Domain d(ellipse_like_profile(0.1));
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 6);
    double delta = 1e-3;
    for (int n : {0, 1}) {
        RotationPlan plan = rotate_differential(d, o, delta, n);
        c.require(plan.linear_error < 1e-5, "order-1 block vs rotated target");
        c << "n=" << n << " linear_err=" << plan.linear_error << " (tol 1e-5)";
        if (n == 1) {
            c.require(plan.free_drift.at(0) < 100 * delta * delta,
                      "controllable order-2 restoration");
            c << " free order-2 drift=" << plan.free_drift.at(0) << " (tol " << 100 * delta * delta
              << ")";
            // the two area-determined mixed partials shift with the rotation;
            // verify they sit exactly where the area identity forces them
            Domain df(plan.final_profile);
            JetMap2 fj = monodromy(df, plan.final_orbit, 2);
            auto rec = recover_phi_partials(fj, 2);
            double id_err = std::max(std::abs(rec[0] - fj.partial_phi(2, 0)),
                                     std::abs(rec[1] - fj.partial_phi(1, 1)));
            c.require(id_err < 1e-7, "area identity on determined partials");
            c << " determined-partial identity error=" << id_err;
        }
        c << "; ";
    }
    return {8, "staged rotation of the differential", c.pass, c.detail.str()};
}

CriterionResult c9_lambda_scaling() {
    Check c;
    Domain d(ellipse_like_profile(0.05));
    PeriodicOrbit o = orbit_from_seed(d, 1, 2, {0.25, 0.75});
    classify(o, d);
    double tau = 3e-3;
    TangencyLiftReport pilot = verify_tangency_lift(d, o, 0.0, 5, tau, 0.12);
    double coeff = pilot.k0_displacement / tau;
    double eps = 1e-6;
    TangencyLiftReport rep = verify_tangency_lift(d, o, 0.0, 5, eps / coeff, 0.12);
    c.require(rep.slope_rel_error < 0.1, "decay slope vs -log(lambda)");
    c.require(std::abs(rep.k0_displacement - eps) < 0.1 * eps, "k0 calibration");
    c << "lambda=" << rep.lambda << " fitted slope=" << rep.fitted_slope << " vs "
      << -std::log(rep.lambda) << " (10%), k0=" << rep.k0_displacement << " target " << eps
      << " (10%), 6 iterates";
    return {9, "lambda^{-k} displacement scaling", c.pass, c.detail.str()};
}

CriterionResult c10_length_identities() {
    Check c;
    double worst_s = 0, worst_phi = 0;
    int count = 0;
    auto visit = [&](const Domain& d, PeriodicOrbit o) {
        auto rep = check_absolute_periodicity_order(d, o, 1);
        worst_s = std::max(worst_s, rep.dL_ds0_identity_error);
        worst_phi = std::max(worst_phi, rep.dL_dphi0_identity_error);
        ++count;
    };
    {
        Domain d(circle_profile());
        for (int q : {2, 3, 4, 8}) visit(d, find_birkhoff_orbit(d, 1, q));
    }
    {
        Domain d(ellipse_like_profile(0.3));
        visit(d, hyperbolic_two_orbit(d));
        for (int q : {3, 5}) visit(d, find_birkhoff_orbit(d, 1, q));
    }
    {
        Domain d(ellipse_like_profile(0.1));
        visit(d, find_birkhoff_orbit(d, 1, 6));
    }
    {
        Domain d(perturbed_circle_profile());
        visit(d, find_birkhoff_orbit(d, 1, 4));
    }
    c.require(worst_s < 1e-9, "dL/ds identity");
    c.require(worst_phi < 1e-9, "dL/dphi identity");
    c << count << " refined orbits: worst |dL/ds0 - (cos(phi_q) ds_q/ds0 - cos(phi_0))| = "
      << worst_s << ", worst |dL/dphi0 - cos(phi_q) ds_q/dphi0| = " << worst_phi
      << " (tol 1e-9)";
    return {10, "length-function derivative identities", c.pass, c.detail.str()};
}

CriterionResult c11_lazutkin() {
    Check c;
    Domain circle(circle_profile());
    LazutkinReport cr = lazutkin_check(circle, 1e-3, 1e-1, 10, 5);
    c.require(cr.max_r1 < 1e-12 && cr.max_r2 < 1e-12, "circle integrability");
    Domain pert(perturbed_circle_profile());
    LazutkinReport pr = lazutkin_check(pert);
    c.require(std::abs(pr.exponent_gap - 1.0) < 0.2, "exponent gap");
    c << "circle residuals " << cr.max_r1 << "/" << cr.max_r2
      << " (tol 1e-12), perturbed-circle exponents " << pr.x_residual_exponent << "/"
      << pr.y_residual_exponent << " gap " << pr.exponent_gap << " (1.0 +- 0.2)";
    return {11, "near-boundary coordinates and residual exponents", c.pass, c.detail.str()};
}

// one member of the tangency family: mild ellipse plus a k=3 harmonic
struct TangencyPipeline {
    Domain d;
    PeriodicOrbit o0, o1;
    SaddleMap m0, m1;
    ManifoldArc wu, ws;

    // mild ellipse plus a fixed symmetry-breaking harmonic; mu scales a
    // second asymmetric harmonic that lifts the deep splitting lobe through
    // zero, producing a fat quadratic fold against the stable manifold
    static RadiusProfile family_profile(double mu, double e0 = 0.0, double e1 = 0.0) {
        RadiusProfile p = ellipse_like_profile(0.05);
        p.harmonics.push_back({5, 0.0, 0.01 / (2 * M_PI)});
        p.harmonics.push_back({7, 0.0, mu / (2 * M_PI)});
        if (e0 != 0.0 || e1 != 0.0) {
            p.harmonics.push_back({4, e0 / (2 * M_PI), 0.0});
            p.harmonics.push_back({6, 0.0, e1 / (2 * M_PI)});
        }
        return p;
    }

    explicit TangencyPipeline(const RadiusProfile& prof)
        : d(prof),
          o0(orbit_from_seed(d, 1, 2, {0.25, 0.75})),
          o1(o0),
          m0((classify(o0, d), billiard_saddle_map(d, o0))),
          m1([&] {
              std::rotate(o1.points.begin(), o1.points.begin() + 1, o1.points.end());
              o1.monodromy_jet.reset();
              o1.eigen.reset();
              classify(o1, d);
              return billiard_saddle_map(d, o1);
          }()),
          wu(local_manifold(m0, true, +1, 6)),
          ws(local_manifold(m1, false, +1, 6)) {}

    SplittingSamples window_restricted(double lo, double hi, int n, double foot_lo,
                                       double foot_hi) const {
        return splitting_function(m0, wu, ws, lo, hi, n, foot_lo, foot_hi);
    }
};

CriterionResult c12_tangency_pipeline() {
    Check c;
    // Phi is measured against a fixed local-graph piece of the stable
    // manifold (foot parameters pinned); without the restriction the foot
    // search hops between branches of the folded arc. Near the integrable
    // limit the whole profile translates with mu, so the search first
    // maximizes the window minimum (bringing the deepest contact to the
    // surface) and then sweeps a fine mu-grid with the tangency detector
    // itself: each fold bottom crosses zero inside the swept range.
    const double ws_lo = -0.19, ws_hi = -0.055;
    const double t_lo = 3.70, t_hi = 3.92;
    double t_last = 3.81;
    auto window_min = [&](double mu) {
        TangencyPipeline P(TangencyPipeline::family_profile(mu));
        SplittingSamples f = P.window_restricted(t_lo, t_hi, 150, ws_lo, ws_hi);
        std::size_t jm = 0;
        for (std::size_t i = 1; i < f.phi.size(); ++i)
            if (f.phi[i] < f.phi[jm]) jm = i;
        t_last = f.t[jm];
        return f.phi[jm];
    };

    // golden-section maximization of the window minimum over mu
    double a = -5.478e-3, b = -5.462e-3;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = window_min(x1), f2 = window_min(x2);
    for (int it = 0; it < 18; ++it) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = window_min(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = window_min(x2);
        }
    }
    double mu_peak = 0.5 * (a + b);
    double peak_val = window_min(mu_peak);
    double t_peak = t_last;
    c << "envelope peak: min Phi = " << peak_val << " at mu = " << mu_peak << "; ";

    // fine sweep with the detector as the oracle
    bool certified = false;
    double mu_star = mu_peak;
    TangencyScan best_scan;
    for (int k = 0; k < 24 && !certified; ++k) {
        double mu = mu_peak + (k % 2 == 0 ? 1 : -1) * ((k + 1) / 2) * 4e-8;
        TangencyPipeline P(TangencyPipeline::family_profile(mu));
        double lo = std::max(t_lo, t_peak - 0.06), hi = std::min(t_hi, t_peak + 0.06);
        SplittingSamples s = P.window_restricted(lo, hi, 128, ws_lo, ws_hi);
        TangencyScan scan = detect_tangency(s.t, s.phi, 1e-8, 1e-6);
        if (scan.tangency) {
            certified = true;
            mu_star = mu;
            best_scan = scan;
        }
    }
    c.require(certified, "tangency certificate within the swept family");
    if (certified && best_scan.tangency) {
        c.require(std::abs(best_scan.tangency->phi_value) < 1e-8, "min |Phi| < 1e-8");
        c.require(std::abs(best_scan.tangency->dphi_value) < 1e-6, "|Phi'| < 1e-6");
        c << "mu* = " << mu_star << ", |Phi| = " << std::abs(best_scan.tangency->phi_value)
          << " (tol 1e-8), |Phi'| = " << std::abs(best_scan.tangency->dphi_value)
          << " (tol 1e-6), order estimate " << best_scan.tangency->order_estimate << "; ";

        // two-parameter unfolding around the tangency
        double t_star = best_scan.tangency->t;
        double lo = std::max(t_lo, t_star - 0.05), hi = std::min(t_hi, t_star + 0.05);
        std::vector<double> ts;
        for (int i = 0; i < 96; ++i) ts.push_back(lo + (hi - lo) * i / 95.0);
        PhiFamily family = [&](const std::vector<double>& eps,
                               const std::vector<double>& tgrid) {
            TangencyPipeline Q(TangencyPipeline::family_profile(mu_star, eps[0], eps[1]));
            SplittingSamples w = Q.window_restricted(
                tgrid.front(), tgrid.back(), static_cast<int>(tgrid.size()), ws_lo, ws_hi);
            return w.phi;
        };
        SplittingFamilyReport rep = unfolding_jacobian(family, 2, ts, t_star, 1, 2e-4);
        c.require(std::abs(rep.genericity_det) > 1e-12, "unfolding determinant");
        c << "unfolding |det| (column-scaled) = " << std::abs(rep.genericity_det)
          << " (threshold 1e-12)";
    }
    return {12, "tangency scan and generic unfolding", c.pass, c.detail.str()};
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions&) {
    std::vector<std::function<CriterionResult()>> criteria = {
        c1_circle_suite,  c2_area_twist, c3_jets_vs_fd,        c4_slope_law,
        c5_reduction_certificates, c6_independence, c7_recovery, c8_rotation,
        c9_lambda_scaling, c10_length_identities, c11_lazutkin, c12_tangency_pipeline};
    std::vector<CriterionResult> out;
    for (auto& fn : criteria) {
        auto start = Clock::now();
        CriterionResult r;
        try {
            r = fn();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
            r.id = static_cast<int>(out.size()) + 1;
        }
        r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
        out.push_back(std::move(r));
    }
    // runtime limits from the contract
    if (out[0].pass && out[0].seconds >= 5.0) {
        out[0].pass = false;
        out[0].detail += " [runtime limit 5 s exceeded]";
    }
    if (out[1].pass && out[1].seconds >= 30.0) {
        out[1].pass = false;
        out[1].detail += " [runtime limit 30 s exceeded]";
    }
    return out;
}

bool report_acceptance(std::ostream& os, const std::vector<CriterionResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        os << "[" << (r.pass ? "PASS" : "FAIL") << "] criterion " << r.id << ": " << r.title
           << " (" << r.seconds << " s)\n        " << r.detail << "\n";
        all = all && r.pass;
    }
    os << (all ? "ACCEPTANCE: all criteria passed\n" : "ACCEPTANCE: FAILURES present\n");
    return all;
}

}  // namespace bjl
