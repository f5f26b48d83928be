#pragma once

// Central finite-difference verification of every differentiable kernel and
// of the calibrators end to end. 64-bit only.

#include <cstdint>
#include <string>
#include <vector>

namespace gcv {

struct GradCheckOptions {
    std::uint64_t seed{1};
    int trials{20};       // random shapes per case
    double step{1e-5};    // central-difference step
    double tol{1e-5};     // max relative error
    double floor{1e-8};   // absolute agreement that always passes
    bool inject_fault{false}; // deliberately corrupt one backward (self test)
};

struct GradCheckCase {
    std::string name;
    double max_rel_err{0.0};
    bool pass{true};
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    bool all_pass{true};
};

GradCheckReport run_gradient_checks(const GradCheckOptions& opt);

} // namespace gcv
