#ifndef BJL_ACCEPTANCE_HPP
#define BJL_ACCEPTANCE_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace bjl {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;  // measured values against their tolerances
    double seconds = 0;
};

struct AcceptanceOptions {
    bool verbose = false;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts = {});

// prints one pass/fail line per criterion, returns the aggregate verdict
bool report_acceptance(std::ostream& os, const std::vector<CriterionResult>& results);

}  // namespace bjl

#endif
