#pragma once

// Analytic parameter and multiply-accumulate accounting for calibrators,
// bottleneck blocks and whole networks, cross-checkable against an exact
// enumeration of a built model's parameters.
//
// Counting conventions:
//  * params, published mode: conv/FC weights only (bias and batch-norm
//    omitted), matching how comparison tables usually quote these blocks.
//  * params, full mode: every learnable element as built (weights, biases,
//    batch-norm gamma/beta).
//  * MACs: per clip (batch 1, `frames` frames). Convolutions and FC layers
//    count output_elements * kernel_volume * C_in / groups. Batch-norm counts
//    2 ops per normalized element, which is what the published totals for
//    these backbones assume. ReLU, pooling, sigmoid and gating are free.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcv/backbone.hpp"
#include "gcv/backbone_spec.hpp"

namespace gcv {

enum class CountingMode { published, full };

struct CountRow {
    std::string name;
    std::int64_t params{0};
    std::int64_t macs{0};
};

struct CountReport {
    std::vector<CountRow> rows;
    std::int64_t total_params{0};
    std::int64_t total_macs{0};
    bool has_baseline{false};
    std::int64_t baseline_params{0};
    std::int64_t baseline_macs{0};

    double overhead_params_pct() const {
        return 100.0 * static_cast<double>(total_params - baseline_params) /
               static_cast<double>(baseline_params);
    }
    double overhead_macs_pct() const {
        return 100.0 * static_cast<double>(total_macs - baseline_macs) /
               static_cast<double>(baseline_macs);
    }

    void finalize();

    std::string render(bool per_layer) const;
    std::string to_csv() const;
};

/// Closed-form calibrator parameter counts for a GC group of pC/4 channels
/// out of C. Comparison kinds are counted at their full insertion width C.
std::int64_t ecal_param_count(CalibratorKind kind, const Ratio& p, std::int64_t channels,
                              CountingMode mode);

/// All four ECals together: p^2 C^2 in published mode.
std::int64_t gc_param_count(const Ratio& p, std::int64_t channels, CountingMode mode);

/// Bottleneck parameter count. Published mode reproduces the 17 C^2 closed form
/// (three convolutions of an identity-shortcut block, in units of the inner
/// width); full mode counts the block as built, including its calibrators.
std::int64_t block_param_count(const BlockSpec& spec, CountingMode mode);

struct PercentageRow {
    std::string name;
    double pct; // share of the 17 C^2 residual block, in percent
};

/// Calibrator cost as a share of the residual block; independent of C.
std::vector<PercentageRow> percentage_table(const Ratio& p);
std::string render_percentage_table(const Ratio& p);

/// Full-model accounting (full-mode params + MACs per clip). When the spec
/// carries calibrators the uncalibrated baseline totals are attached.
CountReport model_count(const NetworkSpec& spec);

struct EnumerationDiff {
    std::string layer;
    std::int64_t analytic{0};
    std::int64_t enumerated{0};
};

struct EnumerationCheck {
    bool pass{true};
    std::vector<EnumerationDiff> diffs;
};

/// Exact comparison of analytic full-mode parameter counts against the
/// parameter elements of a built model, layer by layer.
template <typename T>
EnumerationCheck verify_against_enumeration(Network<T>& model, const CountReport& report) {
    std::map<std::string, std::int64_t> enumerated;
    model.visit([&](const std::string& name, const std::vector<std::int64_t>&,
                    std::vector<T>& value, std::vector<T>&) {
        const auto dot = name.rfind('.');
        enumerated[name.substr(0, dot)] += static_cast<std::int64_t>(value.size());
    });
    std::map<std::string, std::int64_t> analytic;
    for (const auto& row : report.rows)
        if (row.params > 0) analytic[row.name] += row.params;

    EnumerationCheck check;
    for (const auto& [name, count] : analytic) {
        auto it = enumerated.find(name);
        const std::int64_t got = it == enumerated.end() ? 0 : it->second;
        if (got != count) check.diffs.push_back({name, count, got});
    }
    for (const auto& [name, count] : enumerated)
        if (!analytic.count(name)) check.diffs.push_back({name, 0, count});
    check.pass = check.diffs.empty();
    return check;
}

} // namespace gcv
