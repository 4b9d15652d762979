#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

// The acceptance battery behind the `check` subcommand and the acceptance
// test binary: one result per criterion, each a self-contained numerical
// experiment with pinned tolerances.

namespace membrane {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;
};

struct AcceptanceOptions {
    int threads = 2;
    std::uint64_t seed = 20240613;
};

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts, std::ostream& log);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace membrane
