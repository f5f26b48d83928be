#include "gcv/selftest.hpp"

#include <cmath>

#include "gcv/accounting.hpp"
#include "gcv/backbone.hpp"
#include "gcv/reference.hpp"

namespace gcv {

namespace {

using T64 = Tensor<double>;

T64 random_tensor(Shape s, Rng& rng) {
    T64 x(s);
    for (auto& v : x.data) v = rng.uniform(-1.0, 1.0);
    return x;
}

double max_abs_diff(const T64& a, const T64& b) {
    if (!(a.shape == b.shape)) return 1e30;
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

bool kernels_match_reference(Rng& rng) {
    for (int trial = 0; trial < 8; ++trial) {
        Shape s{1 + rng.below(2), 2 + rng.below(4), 2 + rng.below(4), 2 + rng.below(4),
                2 + rng.below(5)};
        auto x = random_tensor(s, rng);
        if (max_abs_diff(ops::pool_global(x), ref::pool_global(x)) > 1e-12) return false;
        if (max_abs_diff(ops::pool_over_time(x), ref::pool_over_time(x)) > 1e-12) return false;
        if (max_abs_diff(ops::pool_over_space(x), ref::pool_over_space(x)) > 1e-12) return false;
        if (max_abs_diff(ops::sigmoid(x), ref::sigmoid(x)) > 1e-12) return false;
        if (max_abs_diff(ops::relu(x), ref::relu(x)) != 0.0) return false;

        auto p = ops::make_same_conv<double>(s.c, 3, 3, 3, 3, 1, 1 + rng.below(2), 1 + rng.below(2));
        for (auto& v : p.kernel) v = rng.uniform(-1, 1);
        for (auto& v : p.bias) v = rng.uniform(-1, 1);
        auto want = ref::conv(x, p.kernel, p.bias, 3, 3, 3, 3, p.st, p.sh, p.sw, p.pt, p.ph, p.pw);
        if (max_abs_diff(ops::conv(x, p), want) > 1e-12) return false;

        Shape gs = s;
        gs.h = 1; gs.w = 1;
        auto g = random_tensor(gs, rng);
        if (max_abs_diff(ops::gate_apply(x, g), ref::gate_apply(x, g)) > 1e-12) return false;

        ops::BatchNormParams<double> bn(s.c);
        for (auto& v : bn.gamma) v = rng.uniform(0.5, 1.5);
        for (auto& v : bn.beta) v = rng.uniform(-0.5, 0.5);
        bn.mode = ops::BnMode::train;
        auto got = ops::batch_norm(x, bn);
        if (max_abs_diff(got, ref::batch_norm_train(x, bn.gamma, bn.beta, bn.eps)) > 1e-10)
            return false;
    }
    return true;
}

bool gc_matches_sliced_composition(Rng& rng) {
    GcConfig cfg;
    cfg.p = Ratio(1, 2);
    cfg.batchnorm = false;
    Rng prng(77);
    GcModule<double> gc(cfg, 8, 0, prng);
    auto x = random_tensor(Shape{1, 3, 3, 3, 8}, rng);
    auto got = gc.forward(x, false);
    auto parts = ops::split_channels(x, std::vector<std::int64_t>(8, 1));
    for (const auto& slot : gc.slots())
        parts[slot.chunk] = slot.cal->forward(parts[slot.chunk], false);
    return max_abs_diff(got, ops::concat_channels(parts)) < 1e-15;
}

bool table1_closed_forms() {
    for (auto p : {Ratio(1, 4), Ratio(1, 2), Ratio(1, 1)})
        for (std::int64_t c : {64, 128, 256, 512}) {
            const std::int64_t u = (p.num * c) / (4 * p.den);
            if (ecal_param_count(CalibratorKind::ecal_g, p, c, CountingMode::published) != u * u)
                return false;
            if (ecal_param_count(CalibratorKind::ecal_s, p, c, CountingMode::published) != 9 * u * u)
                return false;
            if (ecal_param_count(CalibratorKind::ecal_t, p, c, CountingMode::published) != 3 * u * u)
                return false;
            if (ecal_param_count(CalibratorKind::ecal_l, p, c, CountingMode::published) != 3 * u * u)
                return false;
            if (gc_param_count(p, c, CountingMode::published) != 16 * u * u) return false;
        }
    return true;
}

bool percentage_shares() {
    const double want_half[] = {0.09, 0.83, 0.28, 0.28, 1.47};
    const double want_one[] = {0.37, 3.31, 1.10, 1.10, 5.88};
    auto half = percentage_table(Ratio(1, 2));
    auto one = percentage_table(Ratio(1, 1));
    for (int i = 0; i < 5; ++i) {
        if (std::abs(half[i].pct - want_half[i]) > 0.005) return false;
        if (std::abs(one[i].pct - want_one[i]) > 0.005) return false;
    }
    return true;
}

bool model_totals() {
    struct Row {
        const char* style;
        const char* cal;
        Ratio p;
        double params, macs;
    };
    const Row rows[] = {
        {"tsn", "none", Ratio(0, 1), 23.9, 32.9}, {"tsn", "gc", Ratio(1, 2), 24.2, 33.0},
        {"tsn", "gc", Ratio(1, 1), 25.1, 33.3},   {"gst", "none", Ratio(0, 1), 21.0, 29.2},
        {"gst", "gc", Ratio(1, 1), 22.3, 29.6},   {"tsn", "ecal_s", Ratio(1, 1), 24.6, 33.0},
        {"tsn", "ecal_t", Ratio(1, 1), 24.1, 32.9},
    };
    for (const auto& r : rows) {
        auto spec = NetworkSpec::make(r.style, "50", r.cal, r.p, Placement::standard, "1111",
                                      8, 224, 174);
        auto report = model_count(spec);
        if (std::abs(report.total_params / 1e6 - r.params) > 0.1) return false;
        if (std::abs(report.total_macs / 1e9 - r.macs) > 0.1) return false;
    }
    auto loop = model_count(NetworkSpec::make("tsn", "50", "gc", Ratio(1, 1), Placement::loop,
                                              "1111", 8, 224, 174));
    auto standard = model_count(NetworkSpec::make("tsn", "50", "gc", Ratio(1, 1),
                                                  Placement::standard, "1111", 8, 224, 174));
    return loop.total_params == standard.total_params && loop.total_macs == standard.total_macs;
}

bool enumeration_cross_check() {
    for (const char* style : {"tsn", "tsm", "gst"})
        for (const char* cal : {"none", "gc"}) {
            auto spec = NetworkSpec::make(style, "micro", cal,
                                          std::string(cal) == "gc" ? Ratio(1, 1) : Ratio(0, 1),
                                          Placement::standard, "111", 4, 32, 8, 1);
            auto report = model_count(spec);
            auto net = build_network<float>(spec, 3);
            if (!verify_against_enumeration(net, report).pass) return false;
        }
    return true;
}

bool loop_period() {
    GcConfig cfg;
    cfg.p = Ratio(1, 2);
    cfg.placement = Placement::loop;
    const std::int64_t n_chunks = gc_num_chunks(cfg.p, 64);
    if (chunk_assignment(cfg, 64, n_chunks) != chunk_assignment(cfg, 64, 0)) return false;
    for (int k = 0; k < 4; ++k) {
        std::vector<int> visits(n_chunks, 0);
        for (std::int64_t b = 0; b < n_chunks; ++b) visits[chunk_assignment(cfg, 64, b)[k]]++;
        for (int v : visits)
            if (v != 1) return false;
    }
    return true;
}

bool identity_properties(Rng& rng) {
    auto x = random_tensor(Shape{1, 4, 4, 4, 8}, rng);

    // split/concat roundtrip is bit-exact
    auto parts = ops::split_channels(x, {3, 5});
    auto back = ops::concat_channels(parts);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        if (back.data[i] != x.data[i]) return false;

    // unit gate is a bit-exact identity
    auto ones = Tensor<double>::full(Shape{1, 1, 1, 1, 1}, 1.0);
    auto gated = ops::gate_apply(x, ones);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        if (gated.data[i] != x.data[i]) return false;

    // zero-fold shift is a bit-exact identity
    auto shifted = ops::temporal_shift(x, 0);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        if (shifted.data[i] != x.data[i]) return false;

    // zero-parameter GC halves every calibrated channel
    GcConfig cfg;
    cfg.p = Ratio(1, 1);
    Rng prng(5);
    GcModule<double> gc(cfg, 8, 0, prng);
    gc.visit("gc", [](const std::string& name, const auto&, std::vector<double>& value,
                      std::vector<double>&) {
        if (name.find("gamma") == std::string::npos) std::fill(value.begin(), value.end(), 0.0);
    });
    auto halved = gc.forward(x, false);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        if (halved.data[i] != 0.5 * x.data[i]) return false;

    // p=1/2 standard placement: the upper half passes through bit-exactly
    GcConfig half_cfg;
    half_cfg.p = Ratio(1, 2);
    Rng prng2(6);
    GcModule<double> gc_half(half_cfg, 8, 0, prng2);
    auto out = gc_half.forward(x, false);
    for (std::int64_t t = 0; t < 4; ++t)
        for (std::int64_t h = 0; h < 4; ++h)
            for (std::int64_t w = 0; w < 4; ++w)
                for (std::int64_t c = 4; c < 8; ++c)
                    if (out.at(0, t, h, w, c) != x.at(0, t, h, w, c)) return false;

    // gate range
    for (const auto& slot : gc_half.slots())
        for (double g : slot.cal->last_gate().data)
            if (!(g > 0.0 && g < 1.0)) return false;
    return true;
}

bool tsm_zero_fold_is_tsn(Rng& rng) {
    auto tsn_spec = NetworkSpec::make("tsn", "micro", "none", Ratio(0, 1), Placement::standard,
                                      "111", 4, 16, 8, 1);
    auto tsm_spec = tsn_spec;
    tsm_spec.style = BlockStyle::tsm;
    tsm_spec.fold_ratio = 0.0;
    auto a = build_network<double>(tsn_spec, 17);
    auto b = build_network<double>(tsm_spec, 17);
    auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng);
    auto ya = a.forward_classify(x);
    auto yb = b.forward_classify(x);
    for (std::size_t i = 0; i < ya.data.size(); ++i)
        if (ya.data[i] != yb.data[i]) return false;
    return true;
}

} // namespace

SelfTestResult run_selftest(std::uint64_t seed) {
    SelfTestResult result;
    Rng rng(seed);
    auto run = [&](const std::string& name, bool ok) {
        result.checks.emplace_back(name, ok);
        if (ok) ++result.passed;
    };
    run("kernels match naive references (1e-12)", kernels_match_reference(rng));
    run("gc_forward matches sliced composition", gc_matches_sliced_composition(rng));
    run("calibrator closed forms (all p, C)", table1_closed_forms());
    run("percentage table at printed precision", percentage_shares());
    run("model totals at printed precision", model_totals());
    run("analytic counts equal enumeration", enumeration_cross_check());
    run("loop placement period and coverage", loop_period());
    run("identity properties", identity_properties(rng));
    run("tsm/fold=0 equals tsn bitwise", tsm_zero_fold_is_tsn(rng));
    return result;
}

} // namespace gcv
