// Acceptance suite: one criterion per numbered check, one PASS/FAIL line each.
//
//   1 closed-form calibrator counts and percentage shares
//   2 whole-model parameter/MAC totals at printed precision
//   3 overhead of full GC at p=1
//   4 analytic counts equal exact enumeration across the spec matrix
//   5 finite-difference gradient suite
//   6 forward kernels against naive references
//   7 structural gate/partition invariants
//   8 toy benchmark (GC vs plain vs spatial-only micro networks)
//   9 bit-level determinism
//
// Usage: acceptance [--only N]   exit 0 iff every executed criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gcv/accounting.hpp"
#include "gcv/gradcheck.hpp"
#include "gcv/reference.hpp"
#include "gcv/selftest.hpp"
#include "gcv/toybench.hpp"
#include "gcv/weights_io.hpp"

using namespace gcv;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> x(s);
    for (auto& v : x.data) v = rng.uniform(lo, hi);
    return x;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    if (!(a.shape == b.shape)) return 1e30;
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

struct Outcome {
    bool pass{true};
    std::string detail;

    void fail(const std::string& why) {
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += why;
    }
    void note(const std::string& info) {
        if (detail.empty()) detail = info;
    }
};

// --------------------------------------------------------------------- 1

Outcome criterion1() {
    Outcome out;
    for (auto p : {Ratio(1, 4), Ratio(1, 2), Ratio(1, 1)})
        for (std::int64_t c : {64, 128, 256, 512}) {
            const std::int64_t u = (p.num * c) / (4 * p.den); // pC/4
            const struct {
                CalibratorKind kind;
                std::int64_t want;
            } rows[] = {{CalibratorKind::ecal_g, u * u},
                        {CalibratorKind::ecal_s, 9 * u * u},
                        {CalibratorKind::ecal_t, 3 * u * u},
                        {CalibratorKind::ecal_l, 3 * u * u}};
            for (const auto& r : rows)
                if (ecal_param_count(r.kind, p, c, CountingMode::published) != r.want)
                    out.fail(calibrator_name(r.kind) + " p=" + p.str() + " C=" +
                             std::to_string(c));
            if (gc_param_count(p, c, CountingMode::published) != 16 * u * u)
                out.fail("gc total p=" + p.str() + " C=" + std::to_string(c));
        }

    const double want_half[] = {0.09, 0.83, 0.28, 0.28, 1.47};
    const double want_one[] = {0.37, 3.31, 1.10, 1.10, 5.88};
    auto half = percentage_table(Ratio(1, 2));
    auto one = percentage_table(Ratio(1, 1));
    for (int i = 0; i < 5; ++i) {
        if (std::abs(half[i].pct - want_half[i]) > 0.005)
            out.fail("pct p=1/2 row " + half[i].name);
        if (std::abs(one[i].pct - want_one[i]) > 0.005) out.fail("pct p=1 row " + one[i].name);
    }
    out.note("closed forms exact for p in {1/4,1/2,1} x C in {64..512}; shares within 0.005pp");
    return out;
}

// --------------------------------------------------------------------- 2

NetworkSpec table_spec(const std::string& style, const std::string& cal, const Ratio& p,
                       Placement placement = Placement::standard) {
    return NetworkSpec::make(style, "50", cal, p, placement, "1111", 8, 224, 174);
}

Outcome criterion2() {
    Outcome out;
    const struct {
        const char* style;
        const char* cal;
        Ratio p;
        double params, macs;
    } rows[] = {
        {"tsn", "none", Ratio(0, 1), 23.9, 32.9}, {"tsn", "gc", Ratio(1, 2), 24.2, 33.0},
        {"tsn", "gc", Ratio(1, 1), 25.1, 33.3},   {"gst", "none", Ratio(0, 1), 21.0, 29.2},
        {"gst", "gc", Ratio(1, 1), 22.3, 29.6},   {"tsn", "ecal_s", Ratio(1, 1), 24.6, 33.0},
        {"tsn", "ecal_t", Ratio(1, 1), 24.1, 32.9},
    };
    std::ostringstream detail;
    for (const auto& r : rows) {
        auto report = model_count(table_spec(r.style, r.cal, r.p));
        const double mp = report.total_params / 1e6;
        const double gm = report.total_macs / 1e9;
        if (std::abs(mp - r.params) > 0.1 || std::abs(gm - r.macs) > 0.1) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s/%s p=%s got %.2fM/%.2fG want %.1f/%.1f", r.style,
                          r.cal, r.p.str().c_str(), mp, gm, r.params, r.macs);
            out.fail(buf);
        }
    }
    for (auto p : {Ratio(1, 2), Ratio(1, 1)}) {
        auto std_r = model_count(table_spec("tsn", "gc", p, Placement::standard));
        auto loop_r = model_count(table_spec("tsn", "gc", p, Placement::loop));
        if (std_r.total_params != loop_r.total_params || std_r.total_macs != loop_r.total_macs)
            out.fail("loop != standard at p=" + p.str());
    }
    out.note("7 model rows within 0.1M/0.1G; loop == standard");
    return out;
}

// --------------------------------------------------------------------- 3

Outcome criterion3() {
    Outcome out;
    auto report = model_count(table_spec("tsn", "gc", Ratio(1, 1)));
    const double dp = report.overhead_params_pct();
    const double dm = report.overhead_macs_pct();
    char buf[96];
    std::snprintf(buf, sizeof buf, "overhead %.2f%% params, %.2f%% macs", dp, dm);
    out.note(buf);
    if (std::abs(dp - 5.3) > 0.3) out.fail("param overhead outside 5.3 +/- 0.3pp");
    if (std::abs(dm - 1.3) > 0.3) out.fail("mac overhead outside 1.3 +/- 0.3pp");
    return out;
}

// --------------------------------------------------------------------- 4

Outcome criterion4() {
    Outcome out;
    int checked = 0;
    for (const char* style : {"tsn", "tsm", "gst"})
        for (const char* pr : {"0", "1/2", "1"})
            for (auto placement : {Placement::standard, Placement::loop}) {
                const Ratio p = parse_ratio(pr);
                if (p.zero() && placement == Placement::loop) continue;
                auto spec = table_spec(style, p.zero() ? "none" : "gc", p, placement);
                auto report = model_count(spec);
                auto net = build_network<float>(spec, 12345);
                auto check = verify_against_enumeration(net, report);
                ++checked;
                if (!check.pass) {
                    std::string layers;
                    for (const auto& d : check.diffs) layers += " " + d.layer;
                    out.fail(std::string(style) + " p=" + pr + (placement == Placement::loop ? " loop" : "") +
                             " mismatched layers:" + layers);
                }
                if (report.total_params != net.parameter_count())
                    out.fail(std::string(style) + " p=" + pr + " total mismatch");
            }
    out.note(std::to_string(checked) + " specs enumerate exactly");
    return out;
}

// --------------------------------------------------------------------- 5

Outcome criterion5() {
    Outcome out;
    GradCheckOptions opt;
    opt.seed = 20240601;
    opt.trials = 20;
    auto report = run_gradient_checks(opt);
    double worst = 0.0;
    for (const auto& c : report.cases) {
        worst = std::max(worst, c.max_rel_err);
        if (!c.pass) out.fail(c.name + " rel err " + std::to_string(c.max_rel_err));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu cases x 20 shapes, worst rel err %.2e",
                  report.cases.size(), worst);
    out.note(buf);
    return out;
}

// --------------------------------------------------------------------- 6

Outcome criterion6() {
    Outcome out;
    Rng rng(606);
    double worst = 0.0;
    auto track = [&](double d, const char* what) {
        worst = std::max(worst, d);
        if (d > 1e-12) out.fail(std::string(what) + " differs by " + std::to_string(d));
    };
    for (int trial = 0; trial < 12; ++trial) {
        Shape s{1 + rng.below(2), 1 + rng.below(6), 1 + rng.below(6), 1 + rng.below(6),
                1 + rng.below(6)};
        auto x = random_tensor(s, rng);
        track(max_abs_diff(ops::pool_global(x), ref::pool_global(x)), "pool_global");
        track(max_abs_diff(ops::pool_over_time(x), ref::pool_over_time(x)), "pool_over_time");
        track(max_abs_diff(ops::pool_over_space(x), ref::pool_over_space(x)), "pool_over_space");
        track(max_abs_diff(ops::sigmoid(x), ref::sigmoid(x)), "sigmoid");
        track(max_abs_diff(ops::relu(x), ref::relu(x)), "relu");

        const std::int64_t cout = 1 + rng.below(4);
        auto p = ops::make_same_conv<double>(s.c, cout, 3, 3, 3, 1, 1 + rng.below(2),
                                             1 + rng.below(2));
        for (auto& v : p.kernel) v = rng.uniform(-1, 1);
        for (auto& v : p.bias) v = rng.uniform(-1, 1);
        track(max_abs_diff(ops::conv(x, p), ref::conv(x, p.kernel, p.bias, cout, 3, 3, 3, p.st,
                                                      p.sh, p.sw, p.pt, p.ph, p.pw)),
              "conv");

        std::vector<double> w(s.c * cout), b(cout);
        for (auto& v : w) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
        auto pooled = ops::pool_global(x);
        track(max_abs_diff(ops::fully_connected(pooled, w, b, cout),
                           ref::fully_connected(pooled, w, b, cout)),
              "fully_connected");

        Shape gs = s;
        if (trial % 2) gs.t = 1;
        if (trial % 3) { gs.h = 1; gs.w = 1; }
        auto g = random_tensor(gs, rng);
        track(max_abs_diff(ops::gate_apply(x, g), ref::gate_apply(x, g)), "gate_apply");

        ops::BatchNormParams<double> bn(s.c);
        for (auto& v : bn.gamma) v = rng.uniform(0.5, 1.5);
        for (auto& v : bn.beta) v = rng.uniform(-0.5, 0.5);
        bn.mode = ops::BnMode::train;
        if (s.n * s.t * s.h * s.w > 1)
            track(max_abs_diff(ops::batch_norm(x, bn),
                               ref::batch_norm_train(x, bn.gamma, bn.beta, bn.eps)),
                  "batch_norm");

        const std::int64_t fold = ops::shift_fold(s.c, s.c >= 2 ? 0.5 : 0.0);
        track(max_abs_diff(ops::temporal_shift(x, fold), ref::temporal_shift(x, fold)),
              "temporal_shift");

        track(max_abs_diff(ops::max_pool_spatial(x, 3, 2, 1), ref::max_pool_spatial(x, 3, 2, 1)),
              "max_pool");
        track(max_abs_diff(ops::upsample_nearest(x, s.h * 2, s.w * 2),
                           ref::upsample_nearest(x, s.h * 2, s.w * 2)),
              "upsample");
    }

    // gc_forward against hand-sliced composition
    for (int trial = 0; trial < 6; ++trial) {
        GcConfig cfg;
        cfg.p = trial % 2 ? Ratio(1, 2) : Ratio(1, 1);
        cfg.batchnorm = trial % 3 == 0;
        Rng prng(derive_seed(4242, trial));
        GcModule<double> gc(cfg, 8, trial, prng);
        gc.set_bn_mode(ops::BnMode::eval);
        Shape s{1, 1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5), 8};
        auto x = random_tensor(s, rng);
        auto got = gc.forward(x, false);
        auto parts = ops::split_channels(x, std::vector<std::int64_t>(gc.num_chunks(),
                                                                      gc.chunk_size()));
        for (const auto& slot : gc.slots())
            parts[slot.chunk] = slot.cal->forward(parts[slot.chunk], false);
        track(max_abs_diff(got, ops::concat_channels(parts)), "gc_forward");
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "worst deviation %.2e (<= 1e-12)", worst);
    out.note(buf);
    return out;
}

// --------------------------------------------------------------------- 7

Outcome criterion7() {
    Outcome out;
    Rng rng(707);

    // gate range and constancy axes (exact, power-of-two inputs)
    auto pow2_tensor = [&](Shape s) {
        Tensor<double> x(s);
        for (auto& v : x.data) {
            const int k = static_cast<int>(rng.below(5)) - 2;
            v = (rng.uniform() < 0.5 ? -1.0 : 1.0) * std::ldexp(1.0, k);
        }
        return x;
    };
    const Shape s{2, 4, 3, 3, 8};
    for (auto kind : {CalibratorKind::ecal_g, CalibratorKind::ecal_s, CalibratorKind::ecal_t,
                      CalibratorKind::ecal_l}) {
        CalibratorConfig cfg;
        cfg.kind = kind;
        cfg.channels = 8;
        Rng prng(derive_seed(321, static_cast<int>(kind)));
        auto cal = make_calibrator<double>(cfg, prng);
        auto x = pow2_tensor(s);
        auto y = cal->forward(x, false);
        for (double g : cal->last_gate().data)
            if (!(g > 0.0 && g < 1.0)) out.fail(calibrator_name(kind) + " gate out of (0,1)");
        Tensor<double> realized(s);
        for (std::size_t i = 0; i < x.data.size(); ++i) realized.data[i] = y.data[i] / x.data[i];
        const bool over_t = kind == CalibratorKind::ecal_g || kind == CalibratorKind::ecal_s;
        const bool over_hw = kind == CalibratorKind::ecal_g || kind == CalibratorKind::ecal_t;
        for (std::int64_t n = 0; n < s.n && (over_t || over_hw); ++n)
            for (std::int64_t c = 0; c < s.c; ++c)
                for (std::int64_t t = 0; t < s.t; ++t)
                    for (std::int64_t h = 0; h < s.h; ++h)
                        for (std::int64_t w = 0; w < s.w; ++w) {
                            const double v = realized.at(n, t, h, w, c);
                            if (over_t && v != realized.at(n, 0, h, w, c))
                                out.fail(calibrator_name(kind) + " gate varies over T");
                            if (over_hw && v != realized.at(n, t, 0, 0, c))
                                out.fail(calibrator_name(kind) + " gate varies over HW");
                        }
    }

    // untouched channels pass through bit-exactly (p=1/2 standard)
    {
        GcConfig cfg;
        cfg.p = Ratio(1, 2);
        Rng prng(11);
        GcModule<double> gc(cfg, 8, 0, prng);
        auto x = random_tensor(Shape{1, 3, 4, 4, 8}, rng);
        auto y = gc.forward(x, false);
        for (std::int64_t t = 0; t < 3; ++t)
            for (std::int64_t h = 0; h < 4; ++h)
                for (std::int64_t w = 0; w < 4; ++w)
                    for (std::int64_t c = 4; c < 8; ++c)
                        if (y.at(0, t, h, w, c) != x.at(0, t, h, w, c))
                            out.fail("passthrough channel modified");
    }

    // loop assignment has period 4/p and full coverage
    for (auto p : {Ratio(1, 1), Ratio(1, 2), Ratio(1, 4)}) {
        GcConfig cfg;
        cfg.p = p;
        cfg.placement = Placement::loop;
        const std::int64_t period = 4 * p.den / p.num;
        if (gc_num_chunks(p, 64) != period) out.fail("n_chunks != 4/p for p=" + p.str());
        if (chunk_assignment(cfg, 64, period) != chunk_assignment(cfg, 64, 0))
            out.fail("loop period wrong for p=" + p.str());
        for (int k = 0; k < 4; ++k) {
            std::vector<int> visits(period, 0);
            for (std::int64_t b = 0; b < period; ++b) visits[chunk_assignment(cfg, 64, b)[k]]++;
            for (int v : visits)
                if (v != 1) out.fail("coverage gap for p=" + p.str());
        }
    }

    // p -> 0: the spec builds the plain network, forward is bitwise identical
    {
        auto plain = build_network<double>(
            NetworkSpec::make("tsn", "micro", "none", Ratio(0, 1), Placement::standard, "111",
                              4, 16, 8, 1),
            99);
        auto sugar = build_network<double>(
            NetworkSpec::make("tsn", "micro", "gc", Ratio(0, 1), Placement::standard, "111", 4,
                              16, 8, 1),
            99);
        auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng, 0.0, 1.0);
        auto ya = plain.forward_classify(x);
        auto yb = sugar.forward_classify(x);
        for (std::size_t i = 0; i < ya.data.size(); ++i)
            if (ya.data[i] != yb.data[i]) out.fail("p=0 network differs from plain");
    }

    // zero-parameter GC halves calibrated chunks exactly
    {
        GcConfig cfg;
        cfg.p = Ratio(1, 2);
        cfg.batchnorm = true;
        Rng prng(13);
        GcModule<double> gc(cfg, 8, 0, prng);
        gc.visit("gc", [](const std::string& name, const auto&, std::vector<double>& value,
                          std::vector<double>&) {
            if (name.find("gamma") == std::string::npos)
                std::fill(value.begin(), value.end(), 0.0);
        });
        auto x = random_tensor(Shape{2, 3, 3, 3, 8}, rng);
        auto y = gc.forward(x, false);
        for (std::int64_t n = 0; n < 2; ++n)
            for (std::int64_t t = 0; t < 3; ++t)
                for (std::int64_t h = 0; h < 3; ++h)
                    for (std::int64_t w = 0; w < 3; ++w)
                        for (std::int64_t c = 0; c < 8; ++c) {
                            const double want = c < 4 ? 0.5 * x.at(n, t, h, w, c)
                                                      : x.at(n, t, h, w, c);
                            if (y.at(n, t, h, w, c) != want) out.fail("zero-param gate != 0.5");
                        }
    }
    out.note("gates in (0,1), constancy exact, passthrough bit-exact, period 4/p, p=0 identity");
    return out;
}

// --------------------------------------------------------------------- 8

struct ToyRun {
    double final_acc{0.0};
    double best_acc{0.0};
    double temporal_acc{0.0}; // mean accuracy over classes 4 and 5
    toy::GateStats gates;
};

ToyRun run_toy(const std::string& calibrator, std::uint64_t seed, bool want_gates) {
    auto spec = toy::micro_spec(calibrator, calibrator == "none" ? Ratio(0, 1) : Ratio(1, 1));
    auto net = build_network<float>(spec, seed);
    auto train_set = toy::generate_dataset(8, 400, 8, 32, 32, 0.05f, derive_seed(seed, 101));
    auto val_set = toy::generate_dataset(8, 100, 8, 32, 32, 0.05f, derive_seed(seed, 202));
    toy::TrainConfig cfg;
    cfg.steps = 800;
    cfg.batch_size = 8;
    cfg.lr = 0.08f;
    cfg.seed = seed;
    cfg.eval_every = 200;
    auto log = toy::train(net, train_set, val_set, cfg);
    ToyRun run;
    run.final_acc = log.final_accuracy;
    for (const auto& row : log.rows) run.best_acc = std::max(run.best_acc, row.accuracy);
    auto ev = toy::evaluate(net, val_set);
    run.temporal_acc = 0.5 * (ev.per_class[4] + ev.per_class[5]);
    if (want_gates) run.gates = toy::gate_stats(net, val_set);
    return run;
}

double median3(double a, double b, double c) {
    double v[3] = {a, b, c};
    std::sort(v, v + 3);
    return v[1];
}

Outcome criterion8() {
    Outcome out;
    const std::uint64_t seeds[3] = {1, 2, 3};
    double gc_acc[3], plain_acc[3], gc_temporal[3];
    ToyRun median_gates_run;
    for (int i = 0; i < 3; ++i) {
        auto gc = run_toy("gc", seeds[i], i == 0);
        gc_acc[i] = gc.final_acc;
        gc_temporal[i] = gc.temporal_acc;
        if (i == 0) median_gates_run = gc;
        std::printf("    gc    seed %llu: val %.4f (temporal pair %.3f)\n",
                    static_cast<unsigned long long>(seeds[i]), gc.final_acc, gc.temporal_acc);
        std::fflush(stdout);
    }
    for (int i = 0; i < 3; ++i) {
        auto plain = run_toy("none", seeds[i], false);
        plain_acc[i] = plain.final_acc;
        std::printf("    plain seed %llu: val %.4f\n",
                    static_cast<unsigned long long>(seeds[i]), plain.final_acc);
        std::fflush(stdout);
    }
    auto spatial = run_toy("ecal_s", seeds[0], false);
    std::printf("    ecal_s-only seed 1: val %.4f (temporal pair %.3f)\n", spatial.final_acc,
                spatial.temporal_acc);

    const double gc_median = median3(gc_acc[0], gc_acc[1], gc_acc[2]);
    const double plain_median = median3(plain_acc[0], plain_acc[1], plain_acc[2]);
    const double gc_temporal_median = median3(gc_temporal[0], gc_temporal[1], gc_temporal[2]);

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "gc median %.3f (plain %.3f); temporal pair: gc %.3f, ecal_s-only %.3f",
                  gc_median, plain_median, gc_temporal_median, spatial.temporal_acc);
    out.note(buf);
    if (gc_median < 0.90) out.fail("gc median accuracy < 0.90");
    if (gc_median < plain_median) out.fail("gc median below plain median");
    if (spatial.temporal_acc > 0.60) out.fail("spatial-only net separates the temporal pair");
    if (gc_temporal_median < 0.85) out.fail("gc temporal-pair accuracy < 0.85");

    // Informational: mean pre-sigmoid logits of the temporal calibrators for
    // temporally ordered classes vs globally ramped ones.
    double temporal_logit = 0.0, global_logit = 0.0;
    int n_temporal = 0, n_global = 0;
    for (const auto& row : median_gates_run.gates.rows)
        if (row.calibrator == "ecal_t" || row.calibrator == "ecal_l") {
            if (row.label == 4 || row.label == 5) {
                temporal_logit += row.mean_logit;
                ++n_temporal;
            }
            if (row.label == 0 || row.label == 1) {
                global_logit += row.mean_logit;
                ++n_global;
            }
        }
    if (n_temporal && n_global)
        std::printf("    info: mean ecal_t/l logit, temporal classes %.4f vs global classes %.4f\n",
                    temporal_logit / n_temporal, global_logit / n_global);
    return out;
}

// --------------------------------------------------------------------- 9

Outcome criterion9() {
    Outcome out;

    auto selftest_text = [] {
        std::ostringstream s;
        auto result = run_selftest(1);
        for (const auto& [name, ok] : result.checks) s << name << "=" << ok << "\n";
        return s.str();
    };
    if (selftest_text() != selftest_text()) out.fail("selftest output differs across runs");

    auto train_bytes = [](const std::string& path) {
        auto spec = toy::micro_spec("gc", Ratio(1, 1));
        auto net = build_network<float>(spec, 5);
        auto train_set = toy::generate_dataset(8, 8, 8, 32, 32, 0.05f, 55);
        toy::TrainConfig cfg;
        cfg.steps = 25;
        cfg.batch_size = 4;
        cfg.lr = 0.05f;
        cfg.seed = 5;
        cfg.eval_every = 0;
        toy::train(net, train_set, {}, cfg);
        pack_model(net).save(path);
        std::ifstream in(path, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)), {});
    };
    const std::string a = train_bytes("acceptance_det_a.gcw");
    const std::string b = train_bytes("acceptance_det_b.gcw");
    std::remove("acceptance_det_a.gcw");
    std::remove("acceptance_det_b.gcw");
    if (a.empty() || a != b) out.fail("trained weight files differ across identical runs");

    auto ds1 = toy::generate_dataset(8, 4, 8, 32, 32, 0.05f, 66);
    auto ds2 = toy::generate_dataset(8, 4, 8, 32, 32, 0.05f, 66);
    for (std::size_t i = 0; i < ds1.size(); ++i)
        if (ds1[i].frames.data != ds2[i].frames.data) out.fail("dataset bytes differ");

    out.note("selftest, training and data generation are bit-identical across runs");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);

    struct Entry {
        int id;
        const char* title;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "calibrator closed forms and percentage shares", criterion1},
        {2, "model totals at printed precision", criterion2},
        {3, "full-GC overhead", criterion3},
        {4, "analytic counts equal enumeration (spec matrix)", criterion4},
        {5, "finite-difference gradient suite", criterion5},
        {6, "kernels match naive references (1e-12)", criterion6},
        {7, "structural gate/partition invariants", criterion7},
        {8, "toy benchmark: GC vs plain vs spatial-only", criterion8},
        {9, "bit-level determinism", criterion9},
    };

    bool all_pass = true;
    for (const auto& e : entries) {
        if (only != 0 && e.id != only) continue;
        Outcome result = e.fn();
        std::printf("criterion %d (%s): %s%s%s\n", e.id, e.title,
                    result.pass ? "PASS" : "FAIL", result.detail.empty() ? "" : " - ",
                    result.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && result.pass;
    }
    return all_pass ? 0 : 1;
}
