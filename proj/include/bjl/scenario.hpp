#ifndef BJL_SCENARIO_HPP
#define BJL_SCENARIO_HPP

#include <string>
#include <vector>

namespace bjl {

// Reproducible pipeline driver: a scenario file names a domain, a seed, and
// an ordered list of operation invocations; the runner executes them and
// writes a JSON report plus any CSV/plot artifacts. A failed step names the
// operation, the violated contract, and the measured vs tolerated values.
struct StepOutcome {
    std::string name;
    std::string op;
    std::string status;  // "pass", "fail", "error"
    std::string contract;
    std::string measured_json;
    double duration_ms = 0;
};

struct ScenarioReport {
    std::vector<StepOutcome> steps;
    bool pass = false;
    std::string domain_hash;
    std::string report_json;  // full serialized report
};

// tolerance scale from the BJL_TOL_SCALE environment variable (default 1)
double tolerance_scale();

ScenarioReport run_scenario_text(const std::string& scenario_json, const std::string& out_dir,
                                 bool deterministic = false, bool parallel = false);
ScenarioReport run_scenario(const std::string& path, const std::string& out_dir,
                            bool deterministic = false, bool parallel = false);

// two-column whitespace-separated numeric file, 17 significant digits
void emit_plot_data(const std::vector<std::pair<double, double>>& series,
                    const std::string& path);

}  // namespace bjl

#endif
