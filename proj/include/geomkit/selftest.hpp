#pragma once
// Built-in verification suite: one check per advertised numerical guarantee,
// with the tolerances pinned here.  The `selftest` command and the acceptance
// test binary both run these, so the shipped diagnostics and the CI gate
// cannot drift apart.

#include <cstdint>
#include <string>
#include <vector>

namespace geomkit::selftest {

struct CheckResult {
    int id = 0;                // stable check number, 1-based
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    std::string detail;        // measured figures and their bounds
};

// Runs every check in order.  include_slow adds the large landmark matching
// run to check 10; it has its own time budget and is excluded from the
// total-runtime check.  The seed feeds every randomized check, so a report
// is reproducible from its command line.
std::vector<CheckResult> run_all(bool include_slow, std::uint64_t seed = 2026);

// True when every entry passed.
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace geomkit::selftest
