#include "doctest.h"

#include <cmath>

#include "bjl/orbits.hpp"
#include "oracles.hpp"

using namespace bjl;

static Domain circle_domain() { return Domain(circle_profile()); }
static Domain ellipse_domain() { return Domain(ellipse_like_profile(0.3)); }

TEST_CASE("circle q=2 diameter orbit") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 2);
    REQUIRE(o.q == 2);
    CHECK(o.residual < 1e-11);
    CHECK(s_distance(o.points[1].s, o.points[0].s + 0.5) < 1e-10);
    CHECK(o.points[0].phi == doctest::Approx(M_PI / 2).epsilon(1e-10));
    CHECK(o.points[1].phi == doctest::Approx(M_PI / 2).epsilon(1e-10));
}

TEST_CASE("circle q=4 inscribed square") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 4);
    CHECK(o.residual < 1e-11);
    double total = 0;
    for (int i = 0; i < 4; ++i) {
        CHECK(o.points[i].phi == doctest::Approx(M_PI / 4).epsilon(1e-9));
        total += generating_length(d, o.points[i].s, o.points[(i + 1) % 4].s).L;
    }
    CHECK(total == doctest::Approx(4 * std::sqrt(2.0) / (2 * M_PI)).epsilon(1e-10));
    for (int i = 0; i < 4; ++i)
        CHECK(s_distance(o.points[(i + 1) % 4].s, o.points[i].s + 0.25) < 1e-9);
}

TEST_CASE("circle polygons for several q") {
    Domain d = circle_domain();
    for (int q : {3, 5, 8}) {
        PeriodicOrbit o = find_birkhoff_orbit(d, 1, q);
        CHECK(o.residual < 1e-11);
        for (const auto& pt : o.points)
            CHECK(pt.phi == doctest::Approx(M_PI / q).epsilon(1e-8));
    }
}

TEST_CASE("rotation-number consistency: increments of a p/q orbit sum to p") {
    Domain d = ellipse_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 2, 5);
    CHECK(o.residual < 1e-11);
    double total_inc = 0;
    for (int i = 0; i < o.q; ++i)
        total_inc += wrap_unit(o.points[(i + 1) % o.q].s - o.points[i].s);
    CHECK(total_inc == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("ellipse-like q=2 axis orbits: maximizer and saddle from distinct seeds") {
    Domain d = ellipse_domain();
    PeriodicOrbit a = find_birkhoff_orbit(d, 1, 2, 0.0);
    PeriodicOrbit b = orbit_from_seed(d, 1, 2, {0.25, 0.75});
    CHECK(a.residual < 1e-11);
    CHECK(b.residual < 1e-11);
    double La = generating_length(d, a.points[0].s, a.points[1].s).L * 2;
    double Lb = generating_length(d, b.points[0].s, b.points[1].s).L * 2;
    CHECK(La != doctest::Approx(Lb).epsilon(1e-6));
    CHECK(a.points[0].phi == doctest::Approx(M_PI / 2).epsilon(1e-9));
    CHECK(b.points[0].phi == doctest::Approx(M_PI / 2).epsilon(1e-9));
}

TEST_CASE("refine_newton fixed point and convergence from a nearby seed") {
    Domain d = circle_domain();
    PeriodicOrbit exact = find_birkhoff_orbit(d, 1, 2);
    PeriodicOrbit same = refine_newton(d, exact);
    CHECK(same.points[0].s == doctest::Approx(exact.points[0].s));

    PeriodicOrbit off = exact;
    off.points[0].s = wrap_unit(off.points[0].s + 1e-3);
    off.residual = 1.0;  // force refinement
    PeriodicOrbit fixed = refine_newton(d, off);
    CHECK(fixed.residual < 1e-12);
    CHECK(s_distance(fixed.points[1].s, fixed.points[0].s + 0.5) < 1e-10);
}

TEST_CASE("refine_newton strict mode rejects degenerate families") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 2);
    o.points[0].s = wrap_unit(o.points[0].s + 1e-3);
    o.residual = 1.0;
    CHECK_THROWS_AS(refine_newton(d, o, /*allow_gauge_fix=*/false), OrbitError);
}

TEST_CASE("circle monodromy is the parabolic shear") {
    Domain d = circle_domain();
    PeriodicOrbit o2 = find_birkhoff_orbit(d, 1, 2);
    JetMap2 m2 = monodromy(d, o2, 1);
    CHECK(m2.linear().a == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m2.linear().b == doctest::Approx(2.0 / M_PI).epsilon(1e-10));
    CHECK(std::abs(m2.linear().c) < 1e-9);
    CHECK(m2.linear().d == doctest::Approx(1.0).epsilon(1e-10));

    o2.monodromy_jet = m2;
    EigenData e2 = classify(o2, d);
    CHECK(e2.cls == OrbitClass::parabolic);

    PeriodicOrbit o4 = find_birkhoff_orbit(d, 1, 4);
    JetMap2 m4 = monodromy(d, o4, 1);
    CHECK(m4.linear().b == doctest::Approx(4.0 / M_PI).epsilon(1e-9));
    CHECK(m4.linear().det() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("one ellipse-like axis orbit is hyperbolic with real lambda > 1") {
    Domain d = ellipse_domain();
    PeriodicOrbit a = find_birkhoff_orbit(d, 1, 2, 0.0);
    PeriodicOrbit b = orbit_from_seed(d, 1, 2, {0.25, 0.75});
    EigenData ea = classify(a, d);
    EigenData eb = classify(b, d);
    bool a_hyp = ea.cls == OrbitClass::hyperbolic;
    bool b_hyp = eb.cls == OrbitClass::hyperbolic;
    CHECK(a_hyp != b_hyp);
    const EigenData& h = a_hyp ? ea : eb;
    CHECK(std::abs(h.trace) > 2.0);
    CHECK(h.lambda * (1.0 / h.lambda) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(h.lambda > 1.0);
    CHECK(h.min_vertical_angle > 0.0);
}

TEST_CASE("classification of synthetic monodromies") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 2);
    JetMap2 m = JetMap2::identity(1, o.points[0]);

    // trace 2.5, det 1: lambda = 2 by the quadratic formula
    m.s_out.at(1, 0) = 2.0;
    m.s_out.at(0, 1) = 1.0;
    m.phi_out.at(1, 0) = 0.0;
    m.phi_out.at(0, 1) = 0.5;
    o.monodromy_jet = m;
    EigenData e = classify(o, d);
    CHECK(e.cls == OrbitClass::hyperbolic);
    CHECK(e.lambda == doctest::Approx(2.0).epsilon(1e-12));

    // trace 1: elliptic with rotation angle acos(1/2)
    m.s_out.at(1, 0) = 0.5;
    m.s_out.at(0, 1) = -1.0;
    m.phi_out.at(1, 0) = 0.75;
    m.phi_out.at(0, 1) = 0.5;
    o.monodromy_jet = m;
    e = classify(o, d);
    CHECK(e.cls == OrbitClass::elliptic);
    CHECK(e.rotation_angle == doctest::Approx(std::acos(0.5)).epsilon(1e-12));
}

TEST_CASE("absolute periodicity diagnostics on the circle diameter") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 2);
    auto rep = check_absolute_periodicity_order(d, o, 2);
    CHECK(rep.order == -1);  // the shear term 2/pi breaks the differential
    CHECK(rep.dL_ds0_identity_error < 1e-9);
    CHECK(rep.dL_dphi0_identity_error < 1e-9);  // cos(pi/2) = 0 kills dL/dphi0
    Jet2 L = orbit_length_jet(d, o, 1);
    CHECK(std::abs(L.partial(0, 1)) < 1e-9);
    CHECK(L.value() == doctest::Approx(2.0 / M_PI).epsilon(1e-12));
}

TEST_CASE("synthetic identity jet reports the requested order") {
    Domain d = circle_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 2);
    JetMap2 id = JetMap2::identity(3, o.points[0]);
    id.s_out.at(3, 0) = 0.7;  // breaks at degree 3
    o.monodromy_jet = id;
    auto rep = check_absolute_periodicity_order(d, o, 3);
    CHECK(rep.order == 2);
}

TEST_CASE("length identity holds for refined orbits on several domains") {
    for (auto dom : {ellipse_domain(), Domain(ellipse_like_profile(0.15))}) {
        for (int q : {3, 5}) {
            PeriodicOrbit o = find_birkhoff_orbit(dom, 1, q);
            auto rep = check_absolute_periodicity_order(dom, o, 1);
            CHECK(rep.dL_ds0_identity_error < 1e-9);
            CHECK(rep.dL_dphi0_identity_error < 1e-9);
        }
    }
}

TEST_CASE("telescoping identity along non-periodic segments") {
    Domain d = ellipse_domain();
    PhasePoint p{0.1, 1.2};
    int steps = 4;
    JetMap2 acc = JetMap2::identity(1, p);
    double sum_dl_ds0 = 0, sum_dl_dphi0 = 0;
    PhasePoint cur = p;
    for (int i = 0; i < steps; ++i) {
        JetMap2 step = map_jet(d, cur, 1);
        PhasePoint nxt = step.base_out;
        Jet2 lj = generating_length_jet(d, cur.s, nxt.s, 1);
        JetMap2 nxt_jet = compose_maps(step, acc);
        sum_dl_ds0 += lj.partial(1, 0) * acc.s_out.partial(1, 0) +
                      lj.partial(0, 1) * nxt_jet.s_out.partial(1, 0);
        sum_dl_dphi0 += lj.partial(1, 0) * acc.s_out.partial(0, 1) +
                        lj.partial(0, 1) * nxt_jet.s_out.partial(0, 1);
        acc = nxt_jet;
        cur = nxt;
    }
    double phi_q = acc.base_out.phi;
    double expect_s = std::cos(phi_q) * acc.s_out.partial(1, 0) - std::cos(p.phi);
    double expect_phi = std::cos(phi_q) * acc.s_out.partial(0, 1);
    CHECK(sum_dl_ds0 == doctest::Approx(expect_s).epsilon(1e-9));
    CHECK(sum_dl_dphi0 == doctest::Approx(expect_phi).epsilon(1e-9));
}

TEST_CASE("orbit JSON round trip") {
    Domain d = ellipse_domain();
    PeriodicOrbit o = find_birkhoff_orbit(d, 1, 3);
    classify(o, d);
    PeriodicOrbit back = orbit_from_json_text(orbit_to_json_text(o));
    CHECK(back.q == o.q);
    CHECK(back.points[2].s == doctest::Approx(o.points[2].s));
}
