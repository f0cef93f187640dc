#include "doctest.h"

#include <cmath>

#include "bjl/domain.hpp"
#include "oracles.hpp"

using namespace bjl;

TEST_CASE("circle admissibility") {
    Domain d(circle_profile());
    auto rep = check_admissibility(d);
    CHECK(rep.pass);
    CHECK(rep.min_rho == doctest::Approx(1.0 / (2 * M_PI)).epsilon(1e-12));
    CHECK(std::abs(rep.length_error) < 1e-12);
}

TEST_CASE("k=1 harmonic fails closure") {
    RadiusProfile p = circle_profile();
    p.harmonics.push_back({1, 0.01, 0.0});
    auto rep = check_admissibility(Domain(p));
    CHECK_FALSE(rep.pass);
    CHECK(rep.first_harmonic_residual == doctest::Approx(M_PI * 0.01).epsilon(1e-12));
}

TEST_CASE("ellipse-like profile passes after renormalization") {
    RadiusProfile p = ellipse_like_profile(0.3);
    // cos(2 theta) integrates to zero over a period: already unit length
    Domain d(p);
    auto rep = check_admissibility(d);
    CHECK(rep.pass);
    CHECK(d.total_length() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("circle boundary evaluation") {
    Domain d(circle_profile());
    auto bp = d.eval_boundary(0.25, 0);
    CHECK(bp.theta == doctest::Approx(M_PI / 2).epsilon(1e-12));
    CHECK(bp.curvature_jet[0] == doctest::Approx(2 * M_PI).epsilon(1e-12));

    auto bp3 = d.eval_boundary(0.37, 3);
    CHECK(bp3.curvature_jet[0] == doctest::Approx(2 * M_PI).epsilon(1e-12));
    for (int k = 1; k <= 3; ++k) CHECK(std::abs(bp3.curvature_jet[k]) < 1e-10);

    // positions on the circle of radius 1/(2pi) centered at (0, 1/(2pi))
    double r = 1.0 / (2 * M_PI);
    auto q = d.eval_boundary(0.25, 0);
    CHECK(q.position[0] == doctest::Approx(r).epsilon(1e-12));
    CHECK(q.position[1] == doctest::Approx(r).epsilon(1e-12));
}

TEST_CASE("ellipse-like curvature at s=0") {
    Domain d(ellipse_like_profile(0.3));
    auto bp = d.eval_boundary(0.0, 0);
    CHECK(bp.curvature_jet[0] == doctest::Approx(2 * M_PI / 1.3).epsilon(1e-12));
}

TEST_CASE("theta <-> s roundtrip") {
    Domain d(ellipse_like_profile(0.25));
    for (double s = 0.0; s < 1.0; s += 0.0917) {
        double theta = d.theta_of_s(s);
        CHECK(d.s_of_theta(theta) == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("jet order limit is enforced") {
    Domain d(circle_profile());
    CHECK_THROWS_AS(d.eval_boundary(0.1, Domain::kMaxJetOrder + 1), DomainError);
}

TEST_CASE("make_bump zero target gives zero patch") {
    Domain d(circle_profile());
    BumpPatch patch = make_bump(d, 0.0, {0.0, 0.0}, 0.25);
    for (double w : patch.weights) CHECK(w == 0.0);
}

TEST_CASE("make_bump curvature value increment fixes the diameter orbit") {
    Domain d(circle_profile());
    double eps = 1e-3;
    BumpPatch patch = make_bump(d, 0.0, {eps}, 0.3, {0.0, 0.5});
    RadiusProfile p = circle_profile();
    p.bumps.push_back(patch);
    Domain dp(p);

    auto old0 = d.eval_boundary(0.0, 1);
    auto new0 = dp.eval_boundary(0.0, 1);
    CHECK(std::abs(new0.curvature_jet[0] - old0.curvature_jet[0] - eps) < 1e-9);
    // impact point and tangent at s=0 unchanged
    CHECK(std::abs(new0.position[0] - old0.position[0]) < 1e-10);
    CHECK(std::abs(new0.position[1] - old0.position[1]) < 1e-10);
    CHECK(std::abs(new0.theta - old0.theta) < 1e-10);
    // the opposite orbit point is outside the support: untouched
    auto old5 = d.eval_boundary(0.5, 0);
    auto new5 = dp.eval_boundary(0.5, 0);
    CHECK(std::abs(new5.position[0] - old5.position[0]) < 1e-12);
    CHECK(std::abs(new5.position[1] - old5.position[1]) < 1e-12);
    CHECK(std::abs(new5.theta - old5.theta) < 1e-12);
}

TEST_CASE("make_bump pure second-derivative target") {
    Domain d(circle_profile());
    double eps = 1e-3;
    BumpPatch patch = make_bump(d, 0.3, {0.0, 0.0, eps}, 0.3);
    RadiusProfile p = circle_profile();
    p.bumps.push_back(patch);
    Domain dp(p);
    auto oldj = d.eval_boundary(0.3, 2);
    auto newj = dp.eval_boundary(0.3, 2);
    CHECK(std::abs(newj.curvature_jet[0] - oldj.curvature_jet[0]) < 1e-9);
    CHECK(std::abs(newj.curvature_jet[1] - oldj.curvature_jet[1]) < 1e-9);
    CHECK(std::abs(newj.curvature_jet[2] - oldj.curvature_jet[2] - eps) < 1e-9);
}

TEST_CASE("make_bump respects the exclusion set") {
    Domain d(circle_profile());
    CHECK_THROWS_AS(make_bump(d, 0.0, {1e-3}, 0.3, {0.02}), DomainError);
}

TEST_CASE("bump leaves the boundary outside its support untouched") {
    Domain d(circle_profile());
    BumpPatch patch = make_bump(d, 0.2, {5e-4}, 0.25);
    RadiusProfile p = circle_profile();
    p.bumps.push_back(patch);
    Domain dp(p);
    for (double s = 0.0; s < 1.0; s += 0.013) {
        double theta = d.theta_of_s(s);
        if (patch.contains_theta(theta)) continue;
        auto a = d.position_of_theta(theta);
        auto b = dp.position_of_theta(theta);
        CHECK(std::abs(a[0] - b[0]) < 1e-12);
        CHECK(std::abs(a[1] - b[1]) < 1e-12);
    }
}

TEST_CASE("apply_and_renormalize") {
    RadiusProfile circle = circle_profile();
    SUBCASE("empty patch set is the identity") {
        double drift = 1.0;
        RadiusProfile out = apply_and_renormalize(circle, {}, false, &drift);
        CHECK(out.mean_radius == doctest::Approx(circle.mean_radius));
        CHECK(std::abs(drift) < 1e-13);
    }
    SUBCASE("small admissible patch keeps length drift tiny") {
        Domain d(circle);
        BumpPatch patch = make_bump(d, 0.1, {1e-4}, 0.2);
        double drift = 1.0;
        RadiusProfile out = apply_and_renormalize(circle, {patch}, true, &drift);
        CHECK(std::abs(drift) < 1e-8);
        CHECK(check_admissibility(Domain(out), 1e-9, 1e-9, 1e-6).min_rho > 0.0);
    }
    SUBCASE("huge patch violates positivity") {
        BumpPatch monster;
        monster.center_theta = 0.0;
        monster.half_width = 0.5;
        monster.weights = {-10.0};
        CHECK_THROWS_AS(apply_and_renormalize(circle, {monster}, true, nullptr), DomainError);
    }
}

TEST_CASE("profile JSON round trip") {
    RadiusProfile p = ellipse_like_profile(0.2);
    Domain d(p);
    p.bumps.push_back(make_bump(d, 0.4, {1e-4}, 0.2));
    RadiusProfile q = profile_from_json_text(profile_to_json_text(p));
    CHECK(q.mean_radius == doctest::Approx(p.mean_radius));
    REQUIRE(q.harmonics.size() == p.harmonics.size());
    CHECK(q.harmonics[0].cos_coef == doctest::Approx(p.harmonics[0].cos_coef));
    REQUIRE(q.bumps.size() == 1);
    CHECK(q.bumps[0].weights == p.bumps[0].weights);
}
