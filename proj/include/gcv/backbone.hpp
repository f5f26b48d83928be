#pragma once

// Residual bottleneck backbones in three styles with calibration sites:
//
//   tsn   1x1 reduce -> BN/ReLU -> 3x3 -> [site] -> BN/ReLU -> 1x1 expand
//         -> BN -> [post site] -> add shortcut -> ReLU
//   tsm   tsn with a parameter-free temporal shift on the residual branch input
//   gst   the middle conv splits its input into 3C/4 (2D 3x3) and C/4
//         (3D 3x3x3) with no cross-group mixing
//
// GC and the single-ECal ablations sit directly after the middle conv; the
// full-width comparison calibrators (se3d / ge3d_*) scale the residual branch
// after the last BN, s3dg sits at the middle-conv site.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gcv/backbone_spec.hpp"
#include "gcv/gc_module.hpp"

namespace gcv {

template <typename T>
class Bottleneck {
  public:
    Bottleneck(const BlockSpec& bs, Rng& rng) : spec(bs) {
        const std::int64_t width = bs.width;
        const std::int64_t out_ch = bs.out_channels();
        reduce = nn::Conv3d<T>(conv_spec(bs.in_channels, width, 1, 1, 1, 1, 1));
        if (bs.style == BlockStyle::gst) {
            if (width % 4) throw ConfigError("gst width must be divisible by 4");
            mid = nn::Conv3d<T>(conv_spec(3 * width / 4, 3 * width / 4, 1, 3, 3, bs.stride, 1));
            mid3d.emplace(conv_spec(width / 4, width / 4, 3, 3, 3, bs.stride, 1));
        } else {
            mid = nn::Conv3d<T>(conv_spec(width, width, 1, 3, 3, bs.stride, 1));
        }
        expand = nn::Conv3d<T>(conv_spec(width, out_ch, 1, 1, 1, 1, 1));
        bn1 = nn::BatchNorm<T>(width);
        bn2 = nn::BatchNorm<T>(width);
        bn3 = nn::BatchNorm<T>(out_ch);
        if (bs.stride != 1 || bs.in_channels != out_ch) {
            proj.emplace(conv_spec(bs.in_channels, out_ch, 1, 1, 1, bs.stride, 1));
            proj_bn.emplace(out_ch);
        }
        reduce.init_he(rng);
        mid.init_he(rng);
        if (mid3d) mid3d->init_he(rng);
        expand.init_he(rng);
        if (proj) proj->init_he(rng);

        switch (bs.site) {
            case SiteChoice::none:
                break;
            case SiteChoice::gc:
                site.emplace(bs.gc, width, bs.site_index, rng);
                break;
            case SiteChoice::single:
                site.emplace(bs.kind, bs.p, bs.gc.batchnorm, width, rng);
                break;
            case SiteChoice::comparison:
                if (bs.kind == CalibratorKind::s3dg)
                    site.emplace(bs.kind, width, rng);
                else
                    site_post.emplace(bs.kind, out_ch, rng);
                break;
        }
        if (bs.style == BlockStyle::tsm) fold_ = ops::shift_fold(bs.in_channels, bs.fold_ratio);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        Tensor<T> h = spec.style == BlockStyle::tsm ? ops::temporal_shift(x, fold_) : x;
        h = relu1.forward(bn1.forward(reduce.forward(h, training), training), training);
        if (spec.style == BlockStyle::gst) {
            auto parts = ops::split_channels(h, {3 * spec.width / 4, spec.width / 4});
            parts[0] = mid.forward(parts[0], training);
            parts[1] = mid3d->forward(parts[1], training);
            h = ops::concat_channels(parts);
        } else {
            h = mid.forward(h, training);
        }
        if (site) h = site->forward(h, training);
        h = relu2.forward(bn2.forward(h, training), training);
        h = bn3.forward(expand.forward(h, training), training);
        if (site_post) h = site_post->forward(h, training);
        Tensor<T> shortcut =
            proj ? proj_bn->forward(proj->forward(x, training), training) : x;
        nn::add_inplace(h, shortcut);
        return relu3.forward(h, training);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> gsum = relu3.backward(gy);
        Tensor<T> gx_short =
            proj ? proj->backward(proj_bn->backward(gsum)) : gsum;
        Tensor<T> g = gsum;
        if (site_post) g = site_post->backward(g);
        g = expand.backward(bn3.backward(g));
        g = bn2.backward(relu2.backward(g));
        if (site) g = site->backward(g);
        if (spec.style == BlockStyle::gst) {
            auto gparts = ops::split_channels(g, {3 * spec.width / 4, spec.width / 4});
            std::vector<Tensor<T>> gin;
            gin.push_back(mid.backward(gparts[0]));
            gin.push_back(mid3d->backward(gparts[1]));
            g = ops::concat_channels(gin);
        } else {
            g = mid.backward(g);
        }
        g = reduce.backward(bn1.backward(relu1.backward(g)));
        if (spec.style == BlockStyle::tsm) g = ops::temporal_shift_backward(g, fold_);
        nn::add_inplace(g, gx_short);
        return g;
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) {
        reduce.visit(prefix + ".reduce", v);
        bn1.visit(prefix + ".bn1", v);
        mid.visit(prefix + ".mid", v);
        if (mid3d) mid3d->visit(prefix + ".mid3d", v);
        if (site) site->visit("gc." + std::to_string(spec.site_index), v);
        bn2.visit(prefix + ".bn2", v);
        expand.visit(prefix + ".expand", v);
        bn3.visit(prefix + ".bn3", v);
        if (site_post) site_post->visit("gc." + std::to_string(spec.site_index), v);
        if (proj) proj->visit(prefix + ".proj", v);
        if (proj_bn) proj_bn->visit(prefix + ".proj_bn", v);
    }

    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) {
        bn1.visit_buffers(prefix + ".bn1", v);
        bn2.visit_buffers(prefix + ".bn2", v);
        bn3.visit_buffers(prefix + ".bn3", v);
        if (site) site->visit_buffers("gc." + std::to_string(spec.site_index), v);
        if (site_post) site_post->visit_buffers("gc." + std::to_string(spec.site_index), v);
        if (proj_bn) proj_bn->visit_buffers(prefix + ".proj_bn", v);
    }

    void set_bn_mode(ops::BnMode m) {
        bn1.p.mode = m;
        bn2.p.mode = m;
        bn3.p.mode = m;
        if (proj_bn) proj_bn->p.mode = m;
        if (site) site->set_bn_mode(m);
        if (site_post) site_post->set_bn_mode(m);
    }

    BlockSpec spec;
    nn::Conv3d<T> reduce, mid, expand;
    std::optional<nn::Conv3d<T>> mid3d;
    nn::BatchNorm<T> bn1, bn2, bn3;
    nn::Relu<T> relu1, relu2, relu3;
    std::optional<nn::Conv3d<T>> proj;
    std::optional<nn::BatchNorm<T>> proj_bn;
    std::optional<GcModule<T>> site;      // after the middle conv
    std::optional<GcModule<T>> site_post; // residual-branch output (se3d/ge3d_*)

  private:
    static ops::ConvParams<T> conv_spec(std::int64_t cin, std::int64_t cout, std::int64_t kt,
                                        std::int64_t kh, std::int64_t kw,
                                        std::int64_t spatial_stride, std::int64_t groups) {
        auto p = ops::make_same_conv<T>(cin, cout, kt, kh, kw, 1, spatial_stride,
                                        spatial_stride, groups, /*with_bias=*/false);
        return p;
    }

    std::int64_t fold_{0};
};

template <typename T>
class Stem {
  public:
    Stem() = default;
    Stem(const NetworkSpec& spec, Rng& rng) {
        if (spec.depth == NetworkDepth::resnet50) {
            auto p = ops::make_same_conv<T>(spec.in_channels, 64, 1, 7, 7, 1, 2, 2, 1, false);
            conv = nn::Conv3d<T>(std::move(p));
        } else {
            auto p = ops::make_same_conv<T>(spec.in_channels, 16, 1, 3, 3, 1, 2, 2, 1, false);
            conv = nn::Conv3d<T>(std::move(p));
        }
        conv.init_he(rng);
        bn = nn::BatchNorm<T>(conv.p.out_channels);
        pool = nn::MaxPool<T>(3, 2, 1);
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        return pool.forward(relu.forward(bn.forward(conv.forward(x, training), training), training),
                            training);
    }
    Tensor<T> backward(const Tensor<T>& gy) {
        return conv.backward(bn.backward(relu.backward(pool.backward(gy))));
    }
    void visit(const nn::ParamVisitor<T>& v) {
        conv.visit("stem.conv", v);
        bn.visit("stem.bn", v);
    }
    void visit_buffers(const nn::BufferVisitor<T>& v) { bn.visit_buffers("stem.bn", v); }
    void set_bn_mode(ops::BnMode m) { bn.p.mode = m; }

    nn::Conv3d<T> conv;
    nn::BatchNorm<T> bn;
    nn::Relu<T> relu;
    nn::MaxPool<T> pool;
};

template <typename T>
class Network {
  public:
    NetworkSpec spec;
    Stem<T> stem;
    std::vector<Bottleneck<T>> blocks;
    nn::Linear<T> head;

    /// Input [N,frames,res,res,in_channels] -> logits [N,1,1,1,classes].
    Tensor<T> forward_classify(const Tensor<T>& x, bool training = false) {
        if (x.shape.t != spec.frames || x.shape.h != spec.resolution ||
            x.shape.w != spec.resolution || x.shape.c != spec.in_channels)
            throw DimensionError("input " + x.shape.str() + " does not match the network spec");
        Tensor<T> h = stem.forward(x, training);
        for (auto& b : blocks) h = b.forward(h, training);
        pre_head_shape_ = h.shape;
        return head.forward(ops::pool_global(h), training);
    }

    void backward(const Tensor<T>& glogits) {
        Tensor<T> g = ops::pool_global_backward(head.backward(glogits), pre_head_shape_);
        for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) g = it->backward(g);
        stem.backward(g);
    }

    void visit(const nn::ParamVisitor<T>& v) {
        stem.visit(v);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit(block_prefix(i), v);
        head.visit("head", v);
    }

    void visit_buffers(const nn::BufferVisitor<T>& v) {
        stem.visit_buffers(v);
        for (std::size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_buffers(block_prefix(i), v);
    }

    void set_bn_mode(ops::BnMode m) {
        stem.set_bn_mode(m);
        for (auto& b : blocks) b.set_bn_mode(m);
    }

    std::int64_t parameter_count() {
        std::int64_t total = 0;
        visit([&](const std::string&, const auto&, std::vector<T>& value, std::vector<T>&) {
            total += static_cast<std::int64_t>(value.size());
        });
        return total;
    }

    void zero_grad() {
        visit([](const std::string&, const auto&, std::vector<T>&, std::vector<T>& grad) {
            std::fill(grad.begin(), grad.end(), T(0));
        });
    }

    /// GC/calibration sites in network order.
    std::vector<GcModule<T>*> sites() {
        std::vector<GcModule<T>*> out;
        for (auto& b : blocks) {
            if (b.site) out.push_back(&*b.site);
            if (b.site_post) out.push_back(&*b.site_post);
        }
        return out;
    }

    std::string block_prefix(std::size_t i) const {
        return "stage" + std::to_string(blocks[i].spec.stage + 1) + ".block" +
               std::to_string(blocks[i].spec.index_in_stage);
    }

  private:
    Shape pre_head_shape_;
};

template <typename T>
Network<T> build_network(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    Network<T> net;
    net.spec = spec;
    Rng rng(seed);
    net.stem = Stem<T>(spec, rng);
    std::int64_t in_ch = net.stem.conv.p.out_channels;
    std::int64_t site_counter = 0;
    const auto stages = spec.stages();
    for (std::size_t s = 0; s < stages.size(); ++s) {
        for (int b = 0; b < stages[s].blocks; ++b) {
            BlockSpec bs;
            bs.style = spec.style;
            bs.in_channels = in_ch;
            bs.width = stages[s].width;
            bs.stride = b == 0 ? stages[s].stride : 1;
            bs.fold_ratio = spec.fold_ratio;
            bs.stage = static_cast<int>(s);
            bs.index_in_stage = b;
            if (spec.calibrator != SiteChoice::none && spec.mask[s]) {
                bs.site = spec.calibrator;
                bs.kind = spec.kind;
                bs.p = spec.p;
                bs.gc.p = spec.p.zero() ? Ratio(1, 1) : spec.p;
                bs.gc.placement = spec.placement;
                bs.gc.batchnorm = spec.ecal_batchnorm();
                bs.site_index = site_counter++;
            }
            net.blocks.emplace_back(bs, rng);
            in_ch = bs.out_channels();
        }
    }
    net.head = nn::Linear<T>(in_ch, spec.classes);
    // Zero classifier head: fresh models emit uniform logits.
    net.set_bn_mode(ops::BnMode::eval);
    return net;
}

} // namespace gcv
