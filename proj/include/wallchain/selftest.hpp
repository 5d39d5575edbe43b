#pragma once

// The acceptance battery: one PASS/FAIL line per criterion.

#include <iosfwd>
#include <string>
#include <vector>

namespace wallchain {

struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestOptions {
    unsigned jobs = 1;
};

/// Runs every criterion, printing "PASS <name>: <detail>" or "FAIL ..." as
/// each one finishes. A criterion that throws is reported as FAIL.
std::vector<CriterionResult> run_selftest(std::ostream& out, const SelftestOptions& options = {});

}  // namespace wallchain
