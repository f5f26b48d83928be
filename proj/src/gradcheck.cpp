#include "gcv/gradcheck.hpp"

#include <cmath>
#include <functional>

#include "gcv/backbone.hpp"
#include "gcv/gc_module.hpp"

namespace gcv {

namespace {

using Vec = std::vector<double>;

struct Checker {
    const GradCheckOptions& opt;
    GradCheckReport report;
    GradCheckCase* current{nullptr};
    double trial_err{0.0};

    void begin(const std::string& name) {
        report.cases.push_back(GradCheckCase{name, 0.0, true});
        current = &report.cases.back();
    }

    void begin_trial() { trial_err = 0.0; }

    /// Compares analytic gradients for `values` against central differences of
    /// `loss`, which must re-evaluate the forward pass from current contents.
    void compare(Vec& values, const Vec& analytic, const std::function<double()>& loss) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double keep = values[i];
            values[i] = keep + opt.step;
            const double up = loss();
            values[i] = keep - opt.step;
            const double down = loss();
            values[i] = keep;
            const double fd = (up - down) / (2.0 * opt.step);
            const double a = analytic[i];
            const double diff = std::abs(a - fd);
            double err = 0.0;
            if (diff > opt.floor) err = diff / std::max(std::abs(a), std::abs(fd));
            trial_err = std::max(trial_err, err);
        }
    }

    bool trial_ok() const { return trial_err < opt.tol; }

    void commit_trial() {
        if (trial_err > current->max_rel_err) current->max_rel_err = trial_err;
        if (!trial_ok()) current->pass = false;
    }

    void finish() {
        if (!current->pass) report.all_pass = false;
        current = nullptr;
    }
};

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> x(s);
    for (auto& v : x.data) v = rng.uniform(lo, hi);
    return x;
}

Vec random_weights(std::size_t n, Rng& rng) {
    Vec r(n);
    for (auto& v : r) v = rng.uniform(-1.0, 1.0);
    return r;
}

double weighted_sum(const Tensor<double>& y, const Vec& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) acc += y.data[i] * r[i];
    return acc;
}

Tensor<double> as_grad(const Shape& s, const Vec& r) {
    Tensor<double> g(s);
    g.data = r;
    return g;
}

Shape small_shape(Rng& rng, std::int64_t channels = 0) {
    Shape s;
    s.n = 1 + rng.below(2);
    s.t = 1 + rng.below(4);
    s.h = 1 + rng.below(4);
    s.w = 1 + rng.below(4);
    s.c = channels > 0 ? channels : 1 + rng.below(5);
    return s;
}

// ---------------------------------------------------------------------------

void check_pools(Checker& ck, Rng& rng, int trials) {
    struct PoolCase {
        const char* name;
        std::function<Tensor<double>(const Tensor<double>&)> fwd;
        std::function<Tensor<double>(const Tensor<double>&, const Shape&)> bwd;
    };
    const PoolCase cases[] = {
        {"pool_global", [](const Tensor<double>& x) { return ops::pool_global(x); },
         [](const Tensor<double>& g, const Shape& s) { return ops::pool_global_backward(g, s); }},
        {"pool_over_time", [](const Tensor<double>& x) { return ops::pool_over_time(x); },
         [](const Tensor<double>& g, const Shape& s) { return ops::pool_over_time_backward(g, s); }},
        {"pool_over_space", [](const Tensor<double>& x) { return ops::pool_over_space(x); },
         [](const Tensor<double>& g, const Shape& s) { return ops::pool_over_space_backward(g, s); }},
    };
    for (const auto& c : cases) {
        ck.begin(c.name);
        for (int trial = 0; trial < trials; ++trial) {
            ck.begin_trial();
            auto x = random_tensor(small_shape(rng), rng);
            auto y = c.fwd(x);
            auto r = random_weights(y.data.size(), rng);
            auto gx = c.bwd(as_grad(y.shape, r), x.shape);
            ck.compare(x.data, gx.data, [&] { return weighted_sum(c.fwd(x), r); });
            ck.commit_trial();
        }
        ck.finish();
    }
}

void check_fully_connected(Checker& ck, Rng& rng, int trials) {
    ck.begin("fully_connected");
    for (int trial = 0; trial < trials; ++trial) {
        ck.begin_trial();
        const std::int64_t cin = 1 + rng.below(5);
        const std::int64_t cout = 1 + rng.below(5);
        auto x = random_tensor(Shape{1 + rng.below(3), 1, 1, 1, cin}, rng);
        Vec w = random_weights(cin * cout, rng);
        Vec b = random_weights(cout, rng);
        auto y = ops::fully_connected(x, w, b, cout);
        auto r = random_weights(y.data.size(), rng);
        Vec gw, gb;
        auto gx = ops::fully_connected_backward(x, w, cout, as_grad(y.shape, r), gw, gb);
        auto loss = [&] { return weighted_sum(ops::fully_connected(x, w, b, cout), r); };
        ck.compare(x.data, gx.data, loss);
        ck.compare(w, gw, loss);
        ck.compare(b, gb, loss);
        ck.commit_trial();
    }
    ck.finish();
}

void check_conv(Checker& ck, Rng& rng, int trials, const char* name, std::int64_t kt,
                std::int64_t kh, std::int64_t kw, bool strided, bool grouped) {
    ck.begin(name);
    for (int trial = 0; trial < trials; ++trial) {
        ck.begin_trial();
        const std::int64_t groups = grouped ? 2 : 1;
        const std::int64_t cin = groups * (1 + rng.below(2));
        const std::int64_t cout = groups * (1 + rng.below(2));
        auto s = small_shape(rng, cin);
        s.t = std::max(s.t, kt);
        s.h = std::max(s.h, kh);
        s.w = std::max(s.w, kw);
        auto p = ops::make_same_conv<double>(cin, cout, kt, kh, kw, 1,
                                             strided ? 1 + rng.below(2) : 1,
                                             strided ? 1 + rng.below(2) : 1, groups);
        for (auto& v : p.kernel) v = rng.uniform(-1, 1);
        for (auto& v : p.bias) v = rng.uniform(-1, 1);
        auto x = random_tensor(s, rng);
        auto y = ops::conv(x, p);
        auto r = random_weights(y.data.size(), rng);
        Vec gk(p.kernel.size(), 0.0), gb(p.bias.size(), 0.0);
        auto gx = ops::conv_backward(x, p, as_grad(y.shape, r), gk, gb);
        auto loss = [&] { return weighted_sum(ops::conv(x, p), r); };
        ck.compare(x.data, gx.data, loss);
        ck.compare(p.kernel, gk, loss);
        ck.compare(p.bias, gb, loss);
        ck.commit_trial();
    }
    ck.finish();
}

void check_sigmoid(Checker& ck, Rng& rng, int trials, bool fault) {
    ck.begin("sigmoid");
    for (int trial = 0; trial < trials; ++trial) {
        auto x = random_tensor(small_shape(rng), rng, -3.0, 3.0);
        auto y = ops::sigmoid(x);
        auto r = random_weights(y.data.size(), rng);
        auto gx = ops::sigmoid_backward(y, as_grad(y.shape, r));
        if (fault)
            for (auto& v : gx.data) v *= 1.001; // deliberately wrong scale
        ck.begin_trial();
        ck.compare(x.data, gx.data, [&] { return weighted_sum(ops::sigmoid(x), r); });
        ck.commit_trial();
    }
    ck.finish();
}

void check_relu(Checker& ck, Rng& rng, int trials) {
    ck.begin("relu");
    for (int trial = 0; trial < trials; ++trial) {
        auto x = random_tensor(small_shape(rng), rng);
        // Keep samples away from the kink.
        for (auto& v : x.data)
            if (std::abs(v) < 1e-2) v = v < 0 ? v - 1e-2 : v + 1e-2;
        auto y = ops::relu(x);
        auto r = random_weights(y.data.size(), rng);
        auto gx = ops::relu_backward(x, as_grad(y.shape, r));
        ck.begin_trial();
        ck.compare(x.data, gx.data, [&] { return weighted_sum(ops::relu(x), r); });
        ck.commit_trial();
    }
    ck.finish();
}

void check_gate_apply(Checker& ck, Rng& rng, int trials) {
    ck.begin("gate_apply");
    for (int trial = 0; trial < trials; ++trial) {
        auto s = small_shape(rng);
        Shape gs = s;
        if (rng.uniform() < 0.5) gs.t = 1;
        if (rng.uniform() < 0.5) { gs.h = 1; gs.w = 1; }
        if (rng.uniform() < 0.3) gs.c = 1;
        auto x = random_tensor(s, rng);
        auto g = random_tensor(gs, rng);
        auto r = random_weights(s.numel(), rng);
        Tensor<double> gg;
        auto gx = ops::gate_apply_backward(x, g, as_grad(s, r), gg);
        auto loss = [&] { return weighted_sum(ops::gate_apply(x, g), r); };
        ck.begin_trial();
        ck.compare(x.data, gx.data, loss);
        ck.compare(g.data, gg.data, loss);
        ck.commit_trial();
    }
    ck.finish();
}

void check_temporal_shift(Checker& ck, Rng& rng, int trials) {
    ck.begin("temporal_shift");
    for (int trial = 0; trial < trials; ++trial) {
        auto s = small_shape(rng, 8);
        auto x = random_tensor(s, rng);
        const std::int64_t fold = ops::shift_fold(8, 1.0 / 8.0);
        auto r = random_weights(s.numel(), rng);
        auto gx = ops::temporal_shift_backward(as_grad(s, r), fold);
        ck.begin_trial();
        ck.compare(x.data, gx.data,
                   [&] { return weighted_sum(ops::temporal_shift(x, fold), r); });
        ck.commit_trial();
    }
    ck.finish();
}

void check_batch_norm(Checker& ck, Rng& rng, int trials, ops::BnMode mode) {
    ck.begin(mode == ops::BnMode::train ? "batch_norm_train" : "batch_norm_eval");
    for (int trial = 0; trial < trials; ++trial) {
        auto s = small_shape(rng);
        s.n = 2; // keep batch statistics well-defined
        s.t = std::max<std::int64_t>(s.t, 2);
        auto x = random_tensor(s, rng);
        ops::BatchNormParams<double> p(s.c);
        p.mode = mode;
        for (auto& v : p.gamma) v = rng.uniform(0.5, 1.5);
        for (auto& v : p.beta) v = rng.uniform(-0.5, 0.5);
        for (auto& v : p.running_mean) v = rng.uniform(-0.5, 0.5);
        for (auto& v : p.running_var) v = rng.uniform(0.5, 2.0);
        auto r = random_weights(s.numel(), rng);

        ops::BatchNormCache<double> cache;
        auto run = [&]() -> Tensor<double> {
            ops::BatchNormParams<double> local = p; // keep running stats fixed
            return ops::batch_norm<double>(x, local);
        };
        {
            ops::BatchNormParams<double> local = p;
            ops::batch_norm(x, local, &cache);
        }
        Vec gg, gb;
        auto gx = ops::batch_norm_backward(p, cache, as_grad(s, r), gg, gb);
        auto loss = [&] { return weighted_sum(run(), r); };
        ck.begin_trial();
        ck.compare(x.data, gx.data, loss);
        ck.compare(p.gamma, gg, loss);
        ck.compare(p.beta, gb, loss);
        ck.commit_trial();
    }
    ck.finish();
}

void check_max_pool(Checker& ck, Rng& rng, int trials) {
    ck.begin("max_pool_spatial");
    for (int trial = 0; trial < trials; ++trial) {
        auto s = small_shape(rng);
        s.h = std::max<std::int64_t>(s.h, 3);
        s.w = std::max<std::int64_t>(s.w, 3);
        auto x = random_tensor(s, rng);
        // Separate entries so the argmax cannot flip under the FD step.
        for (std::size_t i = 0; i < x.data.size(); ++i)
            x.data[i] += 1e-3 * static_cast<double>(i % 97);
        std::vector<std::int64_t> argmax;
        auto y = ops::max_pool_spatial(x, 3, 2, 1, &argmax);
        auto r = random_weights(y.data.size(), rng);
        auto gx = ops::max_pool_spatial_backward(as_grad(y.shape, r), s, argmax);
        ck.begin_trial();
        ck.compare(x.data, gx.data,
                   [&] { return weighted_sum(ops::max_pool_spatial(x, 3, 2, 1), r); });
        ck.commit_trial();
    }
    ck.finish();
}

void check_upsample(Checker& ck, Rng& rng, int trials) {
    ck.begin("upsample_nearest");
    for (int trial = 0; trial < trials; ++trial) {
        auto s = small_shape(rng);
        auto x = random_tensor(s, rng);
        const std::int64_t oh = s.h * 2, ow = s.w * 2;
        auto y = ops::upsample_nearest(x, oh, ow);
        auto r = random_weights(y.data.size(), rng);
        auto gx = ops::upsample_nearest_backward(as_grad(y.shape, r), s);
        ck.begin_trial();
        ck.compare(x.data, gx.data,
                   [&] { return weighted_sum(ops::upsample_nearest(x, oh, ow), r); });
        ck.commit_trial();
    }
    ck.finish();
}

void check_softmax_xent(Checker& ck, Rng& rng, int trials) {
    ck.begin("softmax_cross_entropy");
    for (int trial = 0; trial < trials; ++trial) {
        const std::int64_t n = 1 + rng.below(3);
        const std::int64_t classes = 2 + rng.below(5);
        Vec logits = random_weights(n * classes, rng);
        std::vector<int> labels(n);
        for (auto& l : labels) l = static_cast<int>(rng.below(classes));
        Vec grad;
        ops::softmax_cross_entropy(logits, n, classes, labels, &grad);
        ck.begin_trial();
        ck.compare(logits, grad, [&] {
            return ops::softmax_cross_entropy<double>(logits, n, classes, labels, nullptr);
        });
        ck.commit_trial();
    }
    ck.finish();
}

// A finite-difference step that crosses a ReLU kink or a max-pool argmax tie
// invalidates the central difference even when the analytic gradient is right.
// Composites containing such units retry a failing trial with a fresh draw:
// a genuinely wrong backward fails every draw, a kink graze does not.
constexpr int kKinkRetries = 4;

void check_calibrator(Checker& ck, Rng& rng, int trials, CalibratorKind kind,
                      bool batchnorm) {
    std::string label = calibrator_name(kind);
    if (batchnorm) label += "_bn";
    const bool has_kinks = kind == CalibratorKind::se3d || kind == CalibratorKind::ge3d_c;
    ck.begin(label);
    for (int trial = 0; trial < trials; ++trial) {
        for (int attempt = 0; attempt < (has_kinks ? kKinkRetries : 1); ++attempt) {
            const std::int64_t c = kind == CalibratorKind::se3d ? 4 : 2 + 2 * rng.below(2);
            CalibratorConfig cfg;
            cfg.kind = kind;
            cfg.channels = c;
            cfg.batchnorm = batchnorm;
            cfg.se_reduction = 2;
            Rng prng(derive_seed(907, trial * 31 + attempt));
            auto cal = make_calibrator<double>(cfg, prng);
            cal->set_bn_mode(ops::BnMode::eval);
            // Randomize BN stats so eval mode is nontrivial.
            cal->visit_buffers("b", [&](const std::string& name, const auto&, Vec& value) {
                for (auto& v : value)
                    v = name.find("var") != std::string::npos ? rng.uniform(0.5, 2.0)
                                                              : rng.uniform(-0.5, 0.5);
            });
            auto s = small_shape(rng, c);
            s.t = std::max<std::int64_t>(s.t, 2);
            auto x = random_tensor(s, rng);
            auto y = cal->forward(x, true);
            auto r = random_weights(y.data.size(), rng);
            cal->visit("z", [](const std::string&, const auto&, Vec&, Vec& grad) {
                std::fill(grad.begin(), grad.end(), 0.0);
            });
            auto gx = cal->backward(as_grad(y.shape, r));
            auto loss = [&] { return weighted_sum(cal->forward(x, false), r); };
            ck.begin_trial();
            ck.compare(x.data, gx.data, loss);
            cal->visit("p", [&](const std::string&, const auto&, Vec& value, Vec& grad) {
                ck.compare(value, grad, loss);
            });
            if (ck.trial_ok()) break;
        }
        ck.commit_trial();
    }
    ck.finish();
}

void check_gc_module(Checker& ck, Rng& rng, int trials) {
    ck.begin("gc_forward");
    for (int trial = 0; trial < trials; ++trial) {
        GcConfig cfg;
        cfg.p = trial % 2 == 0 ? Ratio(1, 1) : Ratio(1, 2);
        cfg.placement = trial % 3 == 0 ? Placement::loop : Placement::standard;
        cfg.batchnorm = true;
        const std::int64_t c = 8;
        Rng prng(derive_seed(911, trial));
        GcModule<double> gc(cfg, c, trial % 4, prng);
        gc.set_bn_mode(ops::BnMode::eval);
        auto s = small_shape(rng, c);
        s.t = std::max<std::int64_t>(s.t, 2);
        auto x = random_tensor(s, rng);
        auto y = gc.forward(x, true);
        auto r = random_weights(y.data.size(), rng);
        gc.visit("z", [](const std::string&, const auto&, Vec&, Vec& grad) {
            std::fill(grad.begin(), grad.end(), 0.0);
        });
        auto gx = gc.backward(as_grad(y.shape, r));
        auto loss = [&] { return weighted_sum(gc.forward(x, false), r); };
        ck.begin_trial();
        ck.compare(x.data, gx.data, loss);
        gc.visit("p", [&](const std::string&, const auto&, Vec& value, Vec& grad) {
            ck.compare(value, grad, loss);
        });
        ck.commit_trial();
    }
    ck.finish();
}

void check_bottleneck(Checker& ck, Rng& rng, int trials, BlockStyle style) {
    ck.begin(std::string("bottleneck_") + style_name(style));
    for (int trial = 0; trial < trials; ++trial) {
        for (int attempt = 0; attempt < kKinkRetries; ++attempt) {
            BlockSpec bs;
            bs.style = style;
            bs.in_channels = 8;
            bs.width = 4;
            bs.stride = trial % 2 == 0 ? 1 : 2;
            bs.site = SiteChoice::gc;
            bs.gc.p = Ratio(1, 1);
            bs.gc.batchnorm = style != BlockStyle::gst;
            bs.site_index = trial % 4;
            Rng prng(derive_seed(913, trial * 31 + attempt));
            Bottleneck<double> block(bs, prng);
            block.set_bn_mode(ops::BnMode::eval);
            Shape s{1, 2 + rng.below(2), 4, 4, 8};
            auto x = random_tensor(s, rng);
            auto y = block.forward(x, true);
            auto r = random_weights(y.data.size(), rng);
            block.visit("z", [](const std::string&, const auto&, Vec&, Vec& grad) {
                std::fill(grad.begin(), grad.end(), 0.0);
            });
            auto gx = block.backward(as_grad(y.shape, r));
            auto loss = [&] { return weighted_sum(block.forward(x, false), r); };
            ck.begin_trial();
            ck.compare(x.data, gx.data, loss);
            block.visit("p", [&](const std::string&, const auto&, Vec& value, Vec& grad) {
                ck.compare(value, grad, loss);
            });
            if (ck.trial_ok()) break;
        }
        ck.commit_trial();
    }
    ck.finish();
}

} // namespace

GradCheckReport run_gradient_checks(const GradCheckOptions& opt) {
    if (opt.trials < 1) throw ConfigError("gradcheck requires trials >= 1");
    Checker ck{opt, {}, nullptr};
    Rng rng(opt.seed);

    check_pools(ck, rng, opt.trials);
    check_fully_connected(ck, rng, opt.trials);
    check_conv(ck, rng, opt.trials, "conv_temporal_3x1x1", 3, 1, 1, false, false);
    check_conv(ck, rng, opt.trials, "conv_spatial_1x3x3", 1, 3, 3, true, false);
    check_conv(ck, rng, opt.trials, "conv_3x3x3", 3, 3, 3, true, false);
    check_conv(ck, rng, opt.trials, "conv_grouped", 3, 3, 3, true, true);
    check_sigmoid(ck, rng, opt.trials, opt.inject_fault);
    check_relu(ck, rng, opt.trials);
    check_gate_apply(ck, rng, opt.trials);
    check_temporal_shift(ck, rng, opt.trials);
    check_batch_norm(ck, rng, opt.trials, ops::BnMode::train);
    check_batch_norm(ck, rng, opt.trials, ops::BnMode::eval);
    check_max_pool(ck, rng, opt.trials);
    check_upsample(ck, rng, opt.trials);
    check_softmax_xent(ck, rng, opt.trials);

    for (auto kind : {CalibratorKind::ecal_g, CalibratorKind::ecal_s, CalibratorKind::ecal_t,
                      CalibratorKind::ecal_l}) {
        check_calibrator(ck, rng, opt.trials, kind, false);
        check_calibrator(ck, rng, opt.trials, kind, true);
    }
    for (auto kind : {CalibratorKind::se3d, CalibratorKind::ge3d_g, CalibratorKind::ge3d_c,
                      CalibratorKind::s3dg})
        check_calibrator(ck, rng, opt.trials, kind, false);

    check_gc_module(ck, rng, opt.trials);
    check_bottleneck(ck, rng, std::max(1, opt.trials / 4), BlockStyle::tsn);
    check_bottleneck(ck, rng, std::max(1, opt.trials / 4), BlockStyle::tsm);
    check_bottleneck(ck, rng, std::max(1, opt.trials / 4), BlockStyle::gst);

    return ck.report;
}

} // namespace gcv
