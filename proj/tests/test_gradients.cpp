#include <doctest.h>

#include "gcv/gradcheck.hpp"
#include "gcv/tensor.hpp"

using namespace gcv;

TEST_CASE("finite differences confirm every backward pass") {
    GradCheckOptions opt;
    opt.seed = 2024;
    opt.trials = 6; // the full 20-trial sweep runs in the acceptance suite
    auto report = run_gradient_checks(opt);
    CHECK(report.all_pass);
    for (const auto& c : report.cases) {
        INFO(c.name << " max rel err " << c.max_rel_err);
        CHECK(c.pass);
        CHECK(c.max_rel_err < opt.tol);
    }
    // Sanity on coverage: kernels plus calibrators plus composites.
    CHECK(report.cases.size() >= 25);
}

TEST_CASE("an injected wrong backward is caught and named") {
    GradCheckOptions opt;
    opt.seed = 2024;
    opt.trials = 2;
    opt.inject_fault = true;
    auto report = run_gradient_checks(opt);
    CHECK(!report.all_pass);
    bool sigmoid_failed = false;
    for (const auto& c : report.cases)
        if (c.name == "sigmoid" && !c.pass) sigmoid_failed = true;
    CHECK(sigmoid_failed);
}

TEST_CASE("gradcheck rejects zero trials") {
    GradCheckOptions opt;
    opt.trials = 0;
    CHECK_THROWS_AS(run_gradient_checks(opt), ConfigError);
}
