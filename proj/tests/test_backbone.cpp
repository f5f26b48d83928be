#include <doctest.h>

#include <cmath>
#include <map>

#include "gcv/backbone.hpp"
#include "gcv/reference.hpp"

using namespace gcv;

namespace {

Tensor<double> random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor<double> x(s);
    for (auto& v : x.data) v = rng.uniform(lo, hi);
    return x;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
    REQUIRE(a.shape == b.shape);
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

Tensor<double> ref_conv(const Tensor<double>& x, const ops::ConvParams<double>& p) {
    return ref::conv(x, p.kernel, p.bias, p.out_channels, p.kt, p.kh, p.kw, p.st, p.sh,
                     p.sw, p.pt, p.ph, p.pw, p.groups);
}

Tensor<double> ref_bn_eval(const Tensor<double>& x, const nn::BatchNorm<double>& bn) {
    return ref::batch_norm_eval(x, bn.p.gamma, bn.p.beta, bn.p.running_mean,
                                bn.p.running_var, bn.p.eps);
}

/// Straight-line bottleneck evaluation from the block's own parameters using
/// only the naive reference kernels. mid_scale multiplies the middle-conv
/// output, standing in for a constant calibration gate.
Tensor<double> ref_bottleneck(Bottleneck<double>& b, const Tensor<double>& x,
                              double mid_scale = 1.0) {
    Tensor<double> h = b.spec.style == BlockStyle::tsm
                           ? ref::temporal_shift(x, ops::shift_fold(b.spec.in_channels,
                                                                    b.spec.fold_ratio))
                           : x;
    h = ref::relu(ref_bn_eval(ref_conv(h, b.reduce.p), b.bn1));
    if (b.spec.style == BlockStyle::gst) {
        auto parts = ops::split_channels(h, {3 * b.spec.width / 4, b.spec.width / 4});
        parts[0] = ref_conv(parts[0], b.mid.p);
        parts[1] = ref_conv(parts[1], b.mid3d->p);
        h = ops::concat_channels(parts);
    } else {
        h = ref_conv(h, b.mid.p);
    }
    if (mid_scale != 1.0)
        for (auto& v : h.data) v *= mid_scale;
    h = ref::relu(ref_bn_eval(h, b.bn2));
    h = ref_bn_eval(ref_conv(h, b.expand.p), b.bn3);
    Tensor<double> shortcut = b.proj ? ref_bn_eval(ref_conv(x, b.proj->p), *b.proj_bn) : x;
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += shortcut.data[i];
    return ref::relu(h);
}

Tensor<double> ref_network(Network<double>& net, const Tensor<double>& x,
                           double mid_scale = 1.0) {
    Tensor<double> h = ref_conv(x, net.stem.conv.p);
    h = ref::max_pool_spatial(ref::relu(ref_bn_eval(h, net.stem.bn)), 3, 2, 1);
    for (auto& b : net.blocks) h = ref_bottleneck(b, h, mid_scale);
    return ref::fully_connected(ref::pool_global(h), net.head.weight, net.head.bias,
                                net.head.out_channels);
}

NetworkSpec micro_spec(const std::string& style, const std::string& cal, const Ratio& p) {
    auto spec = NetworkSpec::make(style, "micro", cal, p, Placement::standard, "111", 4, 16,
                                  8, 1);
    return spec;
}

} // namespace

TEST_CASE("plain bottleneck matches the composed kernel oracle") {
    for (auto style : {BlockStyle::tsn, BlockStyle::tsm, BlockStyle::gst}) {
        Rng prng(50 + static_cast<int>(style));
        BlockSpec bs;
        bs.style = style;
        bs.in_channels = 16;
        bs.width = 8;
        bs.stride = 2;
        Bottleneck<double> block(bs, prng);
        block.set_bn_mode(ops::BnMode::eval);
        Rng rng(51);
        auto x = random_tensor(Shape{2, 3, 6, 6, 16}, rng);
        auto got = block.forward(x, false);
        auto want = ref_bottleneck(block, x);
        CHECK(got.shape == want.shape);
        CHECK(max_abs_diff(got, want) < 1e-12);
    }
}

TEST_CASE("gst split widths and temporal-identity reduction") {
    Rng prng(52);
    BlockSpec bs;
    bs.style = BlockStyle::gst;
    bs.in_channels = 256;
    bs.width = 64;
    Bottleneck<double> block(bs, prng);
    CHECK(block.mid.p.in_channels == 48);
    CHECK(block.mid.p.out_channels == 48);
    CHECK(block.mid3d->p.in_channels == 16);
    CHECK(block.mid3d->p.out_channels == 16);

    // A 3x3x3 kernel whose only nonzero temporal slice is the center equals
    // the corresponding 1x3x3 spatial conv.
    Rng rng(53);
    auto small = ops::make_same_conv<double>(4, 4, 1, 3, 3);
    for (auto& v : small.kernel) v = rng.uniform(-1, 1);
    auto big = ops::make_same_conv<double>(4, 4, 3, 3, 3);
    for (std::int64_t o = 0; o < 4; ++o)
        for (std::int64_t i = 0; i < 4; ++i)
            for (std::int64_t hw = 0; hw < 9; ++hw)
                big.kernel[(o * 4 + i) * 27 + 9 + hw] = small.kernel[(o * 4 + i) * 9 + hw];
    auto x = random_tensor(Shape{1, 4, 5, 5, 4}, rng);
    CHECK(max_abs_diff(ops::conv(x, big), ops::conv(x, small)) < 1e-12);
}

TEST_CASE("zeroed convolutions with identity shortcut reduce to relu") {
    Rng prng(54);
    BlockSpec bs;
    bs.in_channels = 32;
    bs.width = 8; // out = 32 == in, stride 1: identity shortcut
    Bottleneck<double> block(bs, prng);
    block.set_bn_mode(ops::BnMode::eval);
    CHECK(!block.proj.has_value());
    block.visit("b", [](const std::string& name, const auto&, std::vector<double>& value,
                        std::vector<double>&) {
        if (name.find("kernel") != std::string::npos) std::fill(value.begin(), value.end(), 0.0);
    });
    Rng rng(55);
    auto x = random_tensor(Shape{1, 2, 4, 4, 32}, rng);
    auto out = block.forward(x, false);
    auto want = ref::relu(x);
    CHECK(max_abs_diff(out, want) == 0.0);
}

TEST_CASE("build_network site counts follow the stage mask") {
    auto spec = NetworkSpec::make("tsn", "50", "gc", Ratio(1, 1), Placement::standard,
                                  "1111", 8, 224, 174);
    CHECK(spec.site_count() == 16);

    auto res3 = NetworkSpec::make("tsn", "50", "gc", Ratio(1, 1), Placement::standard,
                                  "0010", 8, 224, 174);
    CHECK(res3.site_count() == 6);

    auto none = NetworkSpec::make("tsn", "50", "gc", Ratio(0, 1), Placement::standard,
                                  "1111", 8, 224, 174);
    CHECK(none.calibrator == SiteChoice::none);
    CHECK(none.site_count() == 0);
}

TEST_CASE("same seed builds a bit-identical parameter inventory") {
    auto spec = micro_spec("tsm", "gc", Ratio(1, 2));
    auto a = build_network<double>(spec, 99);
    auto b = build_network<double>(spec, 99);
    std::vector<double> flat_a, flat_b;
    a.visit([&](const std::string&, const auto&, std::vector<double>& v, std::vector<double>&) {
        flat_a.insert(flat_a.end(), v.begin(), v.end());
    });
    b.visit([&](const std::string&, const auto&, std::vector<double>& v, std::vector<double>&) {
        flat_b.insert(flat_b.end(), v.begin(), v.end());
    });
    REQUIRE(flat_a.size() == flat_b.size());
    for (std::size_t i = 0; i < flat_a.size(); ++i) CHECK(flat_a[i] == flat_b[i]);

    auto c = build_network<double>(spec, 100);
    std::vector<double> flat_c;
    c.visit([&](const std::string&, const auto&, std::vector<double>& v, std::vector<double>&) {
        flat_c.insert(flat_c.end(), v.begin(), v.end());
    });
    bool any_diff = false;
    for (std::size_t i = 0; i < flat_a.size(); ++i) any_diff = any_diff || flat_a[i] != flat_c[i];
    CHECK(any_diff);
}

TEST_CASE("forward_classify contracts") {
    auto spec = micro_spec("tsn", "none", Ratio(0, 1));
    auto net = build_network<double>(spec, 7);

    Tensor<double> zero(Shape{2, 4, 16, 16, 1});
    std::fill(net.head.weight.begin(), net.head.weight.end(), 0.0);
    auto logits = net.forward_classify(zero);
    CHECK(logits.shape == Shape{2, 1, 1, 1, 8});
    for (double v : logits.data) CHECK(v == 0.0);

    Tensor<double> bad(Shape{1, 4, 8, 8, 1});
    CHECK_THROWS_AS(net.forward_classify(bad), DimensionError);
}

TEST_CASE("plain micro network matches the composed kernel oracle end to end") {
    auto spec = micro_spec("tsn", "none", Ratio(0, 1));
    auto net = build_network<double>(spec, 21);
    Rng rng(56);
    auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng);
    auto got = net.forward_classify(x);
    auto want = ref_network(net, x);
    CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("zeroed-calibrator GC net equals plain forward with 0.5 mid gates") {
    auto spec = micro_spec("tsn", "gc", Ratio(1, 1));
    auto net = build_network<double>(spec, 22);
    // Zero every calibrator parameter: each gate becomes exactly 0.5.
    net.visit([](const std::string& name, const auto&, std::vector<double>& value,
                 std::vector<double>&) {
        if (name.rfind("gc.", 0) == 0) std::fill(value.begin(), value.end(), 0.0);
    });
    Rng rng(57);
    auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng);
    auto got = net.forward_classify(x);
    auto want = ref_network(net, x, 0.5);
    CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("inserting GC changes no activation shape and passthrough channels are intact") {
    auto plain_spec = micro_spec("tsn", "none", Ratio(0, 1));
    auto gc_spec = micro_spec("tsn", "gc", Ratio(1, 2));
    auto plain = build_network<double>(plain_spec, 33);
    auto gc = build_network<double>(gc_spec, 33);
    Rng rng(58);
    auto x = random_tensor(Shape{2, 4, 16, 16, 1}, rng);
    auto a = plain.forward_classify(x);
    auto b = gc.forward_classify(x);
    CHECK(a.shape == b.shape);
    for (std::size_t i = 0; i < plain.blocks.size(); ++i) {
        CHECK(gc.blocks[i].site.has_value());
        CHECK(!plain.blocks[i].site.has_value());
    }
}

TEST_CASE("tsm with zero fold equals tsn bitwise") {
    auto tsn_spec = micro_spec("tsn", "none", Ratio(0, 1));
    auto tsm_spec = micro_spec("tsm", "none", Ratio(0, 1));
    tsm_spec.fold_ratio = 0.0;
    auto tsn = build_network<double>(tsn_spec, 44);
    auto tsm = build_network<double>(tsm_spec, 44);
    Rng rng(59);
    auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng);
    auto a = tsn.forward_classify(x);
    auto b = tsm.forward_classify(x);
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
}

TEST_CASE("p=0 gc spec builds the identical plain network") {
    auto a = build_network<double>(micro_spec("gst", "none", Ratio(0, 1)), 60);
    auto b = build_network<double>(micro_spec("gst", "gc", Ratio(0, 1)), 60);
    Rng rng(61);
    auto x = random_tensor(Shape{1, 4, 16, 16, 1}, rng);
    auto ya = a.forward_classify(x);
    auto yb = b.forward_classify(x);
    for (std::size_t i = 0; i < ya.data.size(); ++i) CHECK(ya.data[i] == yb.data[i]);
}

TEST_CASE("network spec config text roundtrip") {
    auto spec = NetworkSpec::make("gst", "50", "gc", Ratio(1, 2), Placement::loop, "1011",
                                  16, 224, 174);
    auto text = spec.render();
    auto back = NetworkSpec::parse(text);
    CHECK(back.style == BlockStyle::gst);
    CHECK(back.depth == NetworkDepth::resnet50);
    CHECK(back.calibrator == SiteChoice::gc);
    CHECK(back.p == Ratio(1, 2));
    CHECK(back.placement == Placement::loop);
    CHECK(back.mask == std::array<bool, 4>{true, false, true, true});
    CHECK(back.frames == 16);
    CHECK(back.render() == text);

    CHECK_THROWS_AS(NetworkSpec::parse("style=vgg\n"), ConfigError);
    CHECK_THROWS_AS(NetworkSpec::parse("oops\n"), ConfigError);
}
