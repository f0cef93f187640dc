#include "doctest.h"

#include <cmath>
#include <random>

#include "bjl/jets.hpp"

using namespace bjl;

TEST_CASE("Jet1 arithmetic against closed forms") {
    // f(t) = exp(sin(t)) / sqrt(1 + t^2) at t0 = 0.4
    double t0 = 0.4;
    Jet1 t = Jet1::variable(6, t0);
    Jet1 f = exp(sin(t)) / sqrt(t * t + 1.0);
    auto fn = [](double x) { return std::exp(std::sin(x)) / std::sqrt(1 + x * x); };
    double h = 1e-5;
    double d1 = (fn(t0 + h) - fn(t0 - h)) / (2 * h);
    double d2 = (fn(t0 + h) - 2 * fn(t0) + fn(t0 - h)) / (h * h);
    CHECK(f.value() == doctest::Approx(fn(t0)).epsilon(1e-12));
    CHECK(f.derivative(1) == doctest::Approx(d1).epsilon(1e-8));
    CHECK(f.derivative(2) == doctest::Approx(d2).epsilon(1e-5));
}

TEST_CASE("Jet1 compose and reciprocal consistency") {
    Jet1 x = Jet1::variable(8, 0.3);
    Jet1 g = sin(x) - std::sin(0.3);  // zero constant
    Jet1 f = Jet1::variable(8, std::sin(0.3));
    Jet1 direct = sin(x);
    Jet1 composed = compose(f, g);
    for (int k = 0; k <= 8; ++k)
        CHECK(composed[k] == doctest::Approx(direct[k]).epsilon(1e-13));
    Jet1 r = reciprocal(direct) * direct;
    CHECK(r[0] == doctest::Approx(1.0));
    for (int k = 1; k <= 8; ++k) CHECK(std::abs(r[k]) < 1e-11);
}

TEST_CASE("Jet2 arithmetic against finite differences") {
    int n = 5;
    Jet2 u = Jet2::variable_u(n, 0.7);
    Jet2 v = Jet2::variable_v(n, -0.2);
    Jet2 f = sin(u * v) + exp(u * 0.5) / (v + 3.0);
    auto fn = [](double a, double b) { return std::sin(a * b) + std::exp(0.5 * a) / (b + 3.0); };
    double h = 1e-4;
    double fuv = (fn(0.7 + h, -0.2 + h) - fn(0.7 + h, -0.2 - h) - fn(0.7 - h, -0.2 + h) +
                  fn(0.7 - h, -0.2 - h)) /
                 (4 * h * h);
    CHECK(f.value() == doctest::Approx(fn(0.7, -0.2)).epsilon(1e-13));
    CHECK(f.partial(1, 1) == doctest::Approx(fuv).epsilon(1e-6));
}

TEST_CASE("Jet2 eval matches truncated Taylor sum") {
    Jet2 u = Jet2::variable_u(6, 1.1);
    Jet2 v = Jet2::variable_v(6, 0.4);
    Jet2 f = exp(u * 0.3) * sin(v) + u * v * v;
    double du = 1e-3, dv = -2e-3;
    double direct =
        std::exp(0.3 * (1.1 + du)) * std::sin(0.4 + dv) + (1.1 + du) * std::pow(0.4 + dv, 2);
    CHECK(f.eval(du, dv) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("compose_maps is associative and respects identity") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> dist(-0.4, 0.4);
    auto random_map = [&](const PhasePoint& in, const PhasePoint& out) {
        JetMap2 m;
        m.order = 4;
        m.base_in = in;
        m.base_out = out;
        Jet2 u = Jet2::variable_u(4, 0.0), v = Jet2::variable_v(4, 0.0);
        m.s_out = u * (1.0 + dist(rng)) + v * dist(rng) + u * u * dist(rng) +
                  u * v * dist(rng) + v * v * v * dist(rng) + out.s;
        m.phi_out = v * (1.0 + dist(rng)) + u * dist(rng) + v * v * dist(rng) +
                    u * u * u * dist(rng) + out.phi;
        return m;
    };
    PhasePoint p0{0.1, 1.0}, p1{0.35, 1.2}, p2{0.6, 0.9}, p3{0.8, 1.5};
    JetMap2 A = random_map(p0, p1), B = random_map(p1, p2), C = random_map(p2, p3);

    JetMap2 left = compose_maps(C, compose_maps(B, A));
    JetMap2 right = compose_maps(compose_maps(C, B), A);
    for (int d = 0; d <= 4; ++d)
        for (int b = 0; b <= d; ++b) {
            CHECK(left.s_out.coeff(d - b, b) ==
                  doctest::Approx(right.s_out.coeff(d - b, b)).epsilon(1e-12));
            CHECK(left.phi_out.coeff(d - b, b) ==
                  doctest::Approx(right.phi_out.coeff(d - b, b)).epsilon(1e-12));
        }

    JetMap2 id = JetMap2::identity(4, p0);
    JetMap2 same = compose_maps(A, id);
    for (int d = 0; d <= 4; ++d)
        for (int b = 0; b <= d; ++b)
            CHECK(same.s_out.coeff(d - b, b) ==
                  doctest::Approx(A.s_out.coeff(d - b, b)).epsilon(1e-13));
}

TEST_CASE("invert_map gives a two-sided jet inverse") {
    JetMap2 m;
    m.order = 5;
    m.base_in = {0.2, 1.1};
    m.base_out = {0.55, 0.8};
    Jet2 u = Jet2::variable_u(5, 0.0), v = Jet2::variable_v(5, 0.0);
    m.s_out = u * 1.4 + v * 0.3 + u * u * 0.2 + v * v * v * 0.05 + m.base_out.s;
    m.phi_out = u * 0.5 + v * 1.1 + u * v * 0.3 + m.base_out.phi;

    JetMap2 mi = invert_map(m);
    JetMap2 comp = compose_maps(mi, m);
    JetMap2 id = JetMap2::identity(5, m.base_in);
    for (int d = 0; d <= 5; ++d)
        for (int b = 0; b <= d; ++b) {
            CHECK(comp.s_out.coeff(d - b, b) ==
                  doctest::Approx(id.s_out.coeff(d - b, b)).epsilon(1e-10));
            CHECK(comp.phi_out.coeff(d - b, b) ==
                  doctest::Approx(id.phi_out.coeff(d - b, b)).epsilon(1e-10));
        }
}

TEST_CASE("wrap helpers") {
    CHECK(wrap_unit(1.25) == doctest::Approx(0.25));
    CHECK(wrap_unit(-0.25) == doctest::Approx(0.75));
    CHECK(s_distance(0.95, 0.05) == doctest::Approx(0.1));
    CHECK(wrap_angle_pm_pi(3 * M_PI) == doctest::Approx(M_PI));
}
