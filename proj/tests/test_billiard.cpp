#include "doctest.h"

#include <cmath>
#include <random>

#include "bjl/billiard.hpp"
#include "bjl/domain.hpp"
#include "oracles.hpp"

using namespace bjl;

static Domain circle_domain() { return Domain(circle_profile()); }
static Domain ellipse_domain() { return Domain(ellipse_like_profile(0.3)); }

TEST_CASE("circle next_hit matches the closed form") {
    Domain d = circle_domain();
    for (auto [s, phi] : {std::pair{0.0, M_PI / 2}, {0.2, M_PI / 3}, {0.9, M_PI / 4}}) {
        PhasePoint got = next_hit(d, {s, phi});
        PhasePoint expect = oracles::circle_next_hit({s, phi});
        CHECK(s_distance(got.s, expect.s) < 1e-12);
        CHECK(got.phi == doctest::Approx(expect.phi).epsilon(1e-12));
    }
    // spec anchor values
    PhasePoint q = next_hit(d, {0.0, M_PI / 2});
    CHECK(q.s == doctest::Approx(0.5).epsilon(1e-12));
    PhasePoint r = next_hit(d, {0.2, M_PI / 3});
    CHECK(r.s == doctest::Approx(0.2 + 1.0 / 3.0).epsilon(1e-12));
    PhasePoint w = next_hit(d, {0.9, M_PI / 4});
    CHECK(w.s == doctest::Approx(0.15).epsilon(1e-11));
}

TEST_CASE("grazing shots are rejected") {
    Domain d = circle_domain();
    CHECK_THROWS_AS(next_hit(d, {0.0, 1e-9}), BilliardError);
    CHECK_THROWS_AS(next_hit(d, {0.0, M_PI - 1e-9}), BilliardError);
}

TEST_CASE("billiard_inverse undoes next_hit") {
    Domain d = ellipse_domain();
    for (auto p : {PhasePoint{0.13, 1.0}, PhasePoint{0.52, 2.1}, PhasePoint{0.88, 0.4}}) {
        PhasePoint q = next_hit(d, p);
        PhasePoint back = billiard_inverse(d, q);
        CHECK(s_distance(back.s, p.s) < 1e-10);
        CHECK(back.phi == doctest::Approx(p.phi).epsilon(1e-10));
    }
    Domain c = circle_domain();
    PhasePoint b = billiard_inverse(c, {0.5, M_PI / 2});
    CHECK(s_distance(b.s, 0.0) < 1e-11);
    PhasePoint b2 = billiard_inverse(c, {0.2 + 1.0 / 3.0, M_PI / 3});
    CHECK(s_distance(b2.s, 0.2) < 1e-11);
}

TEST_CASE("circle one-step differential is the closed-form shear") {
    Domain d = circle_domain();
    for (double phi : {0.5, M_PI / 2, 2.2}) {
        Mat2 df = one_step_differential(d, {0.3, phi});
        CHECK(df.a == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(df.b == doctest::Approx(1.0 / M_PI).epsilon(1e-11));
        CHECK(std::abs(df.c) < 1e-10);
        CHECK(df.d == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(df.det() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("one-step differential matches finite differences on the ellipse-like domain") {
    Domain d = ellipse_domain();
    oracles::Map2 f = [&](double s, double phi) {
        PhasePoint q = next_hit(d, {wrap_unit(s), phi});
        // unwrap: keep s increments continuous for differencing
        double ds = q.s - wrap_unit(s);
        if (ds < 0) ds += 1.0;
        return std::array<double, 2>{s + ds, q.phi};
    };
    PhasePoint p{0.0, M_PI / 2};
    Mat2 df = one_step_differential(d, p);
    CHECK(df.a == doctest::Approx(oracles::fd_partial(f, p.s, p.phi, 1, 0, 0)).epsilon(1e-6));
    CHECK(df.b == doctest::Approx(oracles::fd_partial(f, p.s, p.phi, 0, 1, 0)).epsilon(1e-6));
    CHECK(df.c == doctest::Approx(oracles::fd_partial(f, p.s, p.phi, 1, 0, 1)).epsilon(1e-6));
    CHECK(df.d == doctest::Approx(oracles::fd_partial(f, p.s, p.phi, 0, 1, 1)).epsilon(1e-6));
}

TEST_CASE("area preservation and twist at sampled points") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> us(0.0, 1.0), uphi(0.2, M_PI - 0.2);
    for (const auto& d : {circle_domain(), ellipse_domain()}) {
        for (int i = 0; i < 50; ++i) {
            PhasePoint p{us(rng), uphi(rng)};
            PhasePoint q = next_hit(d, p);
            Mat2 df = one_step_differential(d, p);
            CHECK(std::abs(df.det() - std::sin(p.phi) / std::sin(q.phi)) < 1e-11);
            CHECK(df.b > 0.0);
        }
    }
}

TEST_CASE("circle map jet is affine") {
    Domain d = circle_domain();
    JetMap2 m = map_jet(d, {0.1, 1.1}, 3);
    CHECK(m.s_out.coeff(1, 0) == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(m.s_out.coeff(0, 1) == doctest::Approx(1.0 / M_PI).epsilon(1e-11));
    CHECK(m.phi_out.coeff(1, 0) == doctest::Approx(0.0).epsilon(1e-11));
    CHECK(m.phi_out.coeff(0, 1) == doctest::Approx(1.0).epsilon(1e-11));
    for (int deg = 2; deg <= 3; ++deg) {
        CHECK(m.s_out.max_abs_order(deg) < 1e-10);
        CHECK(m.phi_out.max_abs_order(deg) < 1e-10);
    }
}

TEST_CASE("map jet order 1 equals the closed-form differential") {
    Domain d = ellipse_domain();
    for (auto p : {PhasePoint{0.1, 1.0}, PhasePoint{0.6, 2.0}}) {
        JetMap2 m = map_jet(d, p, 1);
        Mat2 df = one_step_differential(d, p);
        CHECK(m.linear().a == doctest::Approx(df.a).epsilon(1e-10));
        CHECK(m.linear().b == doctest::Approx(df.b).epsilon(1e-10));
        CHECK(m.linear().c == doctest::Approx(df.c).epsilon(1e-10));
        CHECK(m.linear().d == doctest::Approx(df.d).epsilon(1e-10));
    }
}

TEST_CASE("map jet high-order coefficients match finite differences") {
    Domain d = ellipse_domain();
    oracles::Map2 f = [&](double s, double phi) {
        PhasePoint q = next_hit(d, {wrap_unit(s), phi});
        double ds = q.s - wrap_unit(s);
        if (ds < 0) ds += 1.0;
        return std::array<double, 2>{s + ds, q.phi};
    };
    PhasePoint p{0.1, 1.0};
    JetMap2 m = map_jet(d, p, 4);
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 2; ++b) {
            if (a + b == 0) continue;
            double fd_s = oracles::fd_partial(f, p.s, p.phi, a, b, 0);
            double fd_phi = oracles::fd_partial(f, p.s, p.phi, a, b, 1);
            CHECK(m.partial_s(a, b) == doctest::Approx(fd_s).epsilon(2e-4));
            if (std::abs(fd_phi) > 1e-4)
                CHECK(m.partial_phi(a, b) == doctest::Approx(fd_phi).epsilon(2e-4));
        }
    // spec anchor: coefficient (2,0) of s_out within relative 1e-4 of the FD value
    double fd20 = oracles::fd_partial(f, p.s, p.phi, 2, 0, 0);
    CHECK(m.partial_s(2, 0) == doctest::Approx(fd20).epsilon(1e-4));
}

TEST_CASE("two circle steps compose to the doubled shear") {
    Domain d = circle_domain();
    JetMap2 m = iterate_jet(d, {0.0, M_PI / 2}, 2, 2);
    CHECK(m.s_out.coeff(1, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.s_out.coeff(0, 1) == doctest::Approx(2.0 / M_PI).epsilon(1e-10));
    CHECK(std::abs(m.phi_out.coeff(1, 0)) < 1e-10);
    CHECK(m.phi_out.coeff(0, 1) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("jet of f composed with jet of f inverse is the identity") {
    Domain d = ellipse_domain();
    PhasePoint p{0.2, 1.3};
    JetMap2 fwd = map_jet(d, p, 4);
    JetMap2 inv = invert_map(fwd);
    JetMap2 comp = compose_maps(inv, fwd);
    JetMap2 id = JetMap2::identity(4, fwd.base_in);
    for (int dgr = 0; dgr <= 4; ++dgr)
        for (int b = 0; b <= dgr; ++b) {
            CHECK(std::abs(comp.s_out.coeff(dgr - b, b) - id.s_out.coeff(dgr - b, b)) < 1e-9);
            CHECK(std::abs(comp.phi_out.coeff(dgr - b, b) - id.phi_out.coeff(dgr - b, b)) < 1e-9);
        }
}

TEST_CASE("reversibility: reversal conjugation gives the inverse-map jet") {
    Domain d = ellipse_domain();
    PhasePoint p{0.37, 1.2};
    JetMap2 fwd = map_jet(d, p, 3);
    // jet of f at R(q) where q = f(p), conjugated by R, should equal jet of f^{-1} at q... rather:
    // R o f o R is the inverse map; expand f at R(f(p)) and conjugate.
    PhasePoint q = fwd.base_out;
    JetMap2 jet_at_rq = map_jet(d, {q.s, M_PI - q.phi}, 3);
    JetMap2 conj = reversal_conjugate(jet_at_rq);
    JetMap2 inv = invert_map(fwd);
    for (int dgr = 0; dgr <= 3; ++dgr)
        for (int b = 0; b <= dgr; ++b) {
            CHECK(conj.s_out.coeff(dgr - b, b) ==
                  doctest::Approx(inv.s_out.coeff(dgr - b, b)).epsilon(1e-8));
            CHECK(conj.phi_out.coeff(dgr - b, b) ==
                  doctest::Approx(inv.phi_out.coeff(dgr - b, b)).epsilon(1e-8));
        }
}

TEST_CASE("generating length circle anchors") {
    Domain d = circle_domain();
    auto g = generating_length(d, 0.0, 0.5);
    CHECK(g.L == doctest::Approx(1.0 / M_PI).epsilon(1e-12));
    auto g2 = generating_length(d, 0.0, 0.25);
    CHECK(g2.L == doctest::Approx(std::sqrt(2.0) / (2 * M_PI)).epsilon(1e-12));
    CHECK(g2.dL_ds1 == doctest::Approx(std::cos(M_PI / 4)).epsilon(1e-11));
    CHECK_THROWS_AS(generating_length(d, 0.3, 0.3), BilliardError);
}

TEST_CASE("generating length partials encode the chord angles") {
    Domain d = ellipse_domain();
    for (auto p : {PhasePoint{0.1, 0.9}, PhasePoint{0.45, 1.7}}) {
        PhasePoint q = next_hit(d, p);
        auto g = generating_length(d, p.s, q.s);
        CHECK(g.dL_ds0 + std::cos(p.phi) == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(g.dL_ds1 == doctest::Approx(std::cos(q.phi)).epsilon(1e-10));
    }
}

TEST_CASE("generating length jet agrees with values and finite differences") {
    Domain d = ellipse_domain();
    double s0 = 0.12, s1 = 0.57;
    Jet2 L = generating_length_jet(d, s0, s1, 2);
    auto g = generating_length(d, s0, s1);
    CHECK(L.value() == doctest::Approx(g.L).epsilon(1e-12));
    CHECK(L.partial(1, 0) == doctest::Approx(g.dL_ds0).epsilon(1e-10));
    CHECK(L.partial(0, 1) == doctest::Approx(g.dL_ds1).epsilon(1e-10));
    double h = 1e-5;
    double d2 = (generating_length(d, s0 + h, s1).L - 2 * g.L + generating_length(d, s0 - h, s1).L) / (h * h);
    CHECK(L.partial(2, 0) == doctest::Approx(d2).epsilon(1e-4));
}

TEST_CASE("orbit csv dump") {
    Domain d = circle_domain();
    std::string csv = orbit_csv(d, {{0.0, M_PI / 2}, {0.5, M_PI / 2}});
    CHECK(csv.find("s,phi,x,y,kappa") == 0);
    CHECK(csv.find("0.5") != std::string::npos);
}
