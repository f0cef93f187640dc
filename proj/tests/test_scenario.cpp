#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "bjl/scenario.hpp"

using namespace bjl;

TEST_CASE("empty pipeline passes vacuously") {
    ScenarioReport rep = run_scenario_text(R"({"pipeline": []})", "");
    CHECK(rep.pass);
    CHECK(rep.steps.empty());
}

TEST_CASE("circle suite scenario passes") {
    const char* scenario = R"({
        "seed": 42,
        "pipeline": [
            {"op": "check_admissibility"},
            {"op": "next_hit", "params": {"s": 0.0, "phi": 1.5707963267948966,
                                            "expect_s": 0.5, "tol": 1e-10}},
            {"op": "find_orbit", "params": {"p": 1, "q": 4, "store_as": "square"}},
            {"op": "classify_orbit", "params": {"orbit": "square", "expect": "parabolic"}},
            {"op": "orbit_jet", "params": {"orbit": "square", "order": 2}},
            {"op": "absolute_periodicity", "params": {"orbit": "square", "n": 1}},
            {"op": "area_twist_sample", "params": {"points": 200}}
        ]
    })";
    ScenarioReport rep = run_scenario_text(scenario, "");
    for (const auto& s : rep.steps) {
        INFO(s.name, " -> ", s.status, " ", s.measured_json);
        CHECK(s.status == "pass");
    }
    CHECK(rep.pass);
}

TEST_CASE("intentionally failing tolerance yields a failing report") {
    const char* scenario = R"({
        "pipeline": [
            {"op": "next_hit", "params": {"s": 0.0, "phi": 1.5707963267948966,
                                            "expect_s": 0.25, "tol": 1e-12}}
        ]
    })";
    ScenarioReport rep = run_scenario_text(scenario, "");
    CHECK_FALSE(rep.pass);
    CHECK(rep.steps[0].status == "fail");
    // the failure names the operation, the contract and the measured values
    CHECK(rep.steps[0].op == "next_hit");
    CHECK(!rep.steps[0].contract.empty());
    CHECK(rep.steps[0].measured_json.find("expected_s") != std::string::npos);
}

TEST_CASE("deterministic reports are byte-identical") {
    const char* scenario = R"({
        "seed": 7,
        "pipeline": [
            {"op": "find_orbit", "params": {"q": 3, "store_as": "tri"}},
            {"op": "area_twist_sample", "params": {"points": 64}}
        ]
    })";
    ScenarioReport a = run_scenario_text(scenario, "", /*deterministic=*/true);
    ScenarioReport b = run_scenario_text(scenario, "", /*deterministic=*/true);
    CHECK(a.report_json == b.report_json);
}

TEST_CASE("parallel wave scheduling respects dependencies") {
    const char* scenario = R"({
        "pipeline": [
            {"op": "find_orbit", "params": {"q": 3, "store_as": "a"}},
            {"op": "find_orbit", "params": {"q": 4, "store_as": "b"}, "deps": [0]},
            {"op": "classify_orbit", "params": {"orbit": "a"}, "deps": [0]},
            {"op": "classify_orbit", "params": {"orbit": "b"}, "deps": [1]}
        ]
    })";
    ScenarioReport rep = run_scenario_text(scenario, "", false, /*parallel=*/true);
    CHECK(rep.pass);
}

TEST_CASE("BJL_TOL_SCALE loosens tolerances") {
    const char* scenario = R"({
        "pipeline": [
            {"op": "next_hit", "params": {"s": 0.0, "phi": 1.5707963267948966,
                                            "expect_s": 0.500001, "tol": 1e-9}}
        ]
    })";
    ScenarioReport strict = run_scenario_text(scenario, "");
    CHECK_FALSE(strict.pass);
    setenv("BJL_TOL_SCALE", "10000", 1);
    ScenarioReport loose = run_scenario_text(scenario, "");
    unsetenv("BJL_TOL_SCALE");
    CHECK(loose.pass);
}

TEST_CASE("plot data emission") {
    std::string path = std::filesystem::temp_directory_path() / "bjl_plot_test.dat";
    emit_plot_data({{0.0, 1.0}, {0.5, 0.25}}, path);
    std::ifstream in(path);
    double x, y;
    in >> x >> y;
    CHECK(x == 0.0);
    CHECK(y == 1.0);
    emit_plot_data({}, path);  // empty series: empty file, success
    std::ifstream in2(path);
    std::string line;
    CHECK_FALSE(std::getline(in2, line));
    std::filesystem::remove(path);
}
