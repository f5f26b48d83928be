#pragma once

#include <string>
#include <vector>

namespace gcv {

struct SelfTestResult {
    std::vector<std::pair<std::string, bool>> checks;
    int passed{0};
    bool all_pass() const { return passed == static_cast<int>(checks.size()); }
};

/// The built-in invariant suite: kernel-vs-reference equivalence, calibrator
/// closed forms and percentage shares, model totals, analytic-vs-enumeration,
/// loop periodicity and the identity properties.
SelfTestResult run_selftest(std::uint64_t seed = 1);

} // namespace gcv
