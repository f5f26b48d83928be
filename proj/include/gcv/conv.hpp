#pragma once

// 3D cross-correlation over (T,H,W) with zero padding, stride and channel
// groups. Covers temporal 1D (kh=kw=1), spatial 2D (kt=1) and full 3D kernels.
//
// The hot loops are rank-1 updates over the output-channel axis, which is
// contiguous in both the repacked kernel and the accumulator, so the compiler
// can vectorize them. Batch samples are processed in parallel; kernel/bias
// gradients are accumulated per sample and reduced in sample order, so results
// do not depend on the worker count.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gcv/tensor.hpp"
#include "gcv/threading.hpp"

namespace gcv::ops {

template <typename T>
struct ConvParams {
    std::int64_t in_channels{0}, out_channels{0};
    std::int64_t kt{1}, kh{1}, kw{1};
    std::int64_t st{1}, sh{1}, sw{1};
    std::int64_t pt{0}, ph{0}, pw{0};
    std::int64_t groups{1};
    std::vector<T> kernel; // [c_out][c_in/groups][kt][kh][kw]
    std::vector<T> bias;   // [c_out] or empty

    std::int64_t kernel_volume() const { return kt * kh * kw; }

    std::int64_t weight_count() const {
        return out_channels * (in_channels / groups) * kernel_volume();
    }

    void validate() const {
        if (in_channels < 1 || out_channels < 1) throw ConfigError("conv: bad channel counts");
        if (groups < 1 || in_channels % groups || out_channels % groups)
            throw ConfigError("conv: groups must divide both channel counts");
        if (static_cast<std::int64_t>(kernel.size()) != weight_count())
            throw DimensionError("conv: kernel buffer length mismatch");
        if (!bias.empty() && static_cast<std::int64_t>(bias.size()) != out_channels)
            throw DimensionError("conv: bias length != C_out");
        if (st < 1 || sh < 1 || sw < 1) throw ConfigError("conv: stride must be >= 1");
    }
};

/// Builds a "same"-padded convolution: output extents equal input extents at
/// stride 1. Odd kernels only.
template <typename T>
ConvParams<T> make_same_conv(std::int64_t c_in, std::int64_t c_out, std::int64_t kt,
                             std::int64_t kh, std::int64_t kw, std::int64_t st = 1,
                             std::int64_t sh = 1, std::int64_t sw = 1,
                             std::int64_t groups = 1, bool with_bias = true) {
    if (kt % 2 == 0 || kh % 2 == 0 || kw % 2 == 0)
        throw ConfigError("same-padded conv requires odd kernel extents");
    ConvParams<T> p;
    p.in_channels = c_in;
    p.out_channels = c_out;
    p.kt = kt; p.kh = kh; p.kw = kw;
    p.st = st; p.sh = sh; p.sw = sw;
    p.pt = (kt - 1) / 2; p.ph = (kh - 1) / 2; p.pw = (kw - 1) / 2;
    p.groups = groups;
    p.kernel.assign(p.weight_count(), T(0));
    if (with_bias) p.bias.assign(c_out, T(0));
    return p;
}

inline Shape conv_output_shape(const Shape& s, std::int64_t c_out, std::int64_t kt,
                               std::int64_t kh, std::int64_t kw, std::int64_t st,
                               std::int64_t sh, std::int64_t sw, std::int64_t pt,
                               std::int64_t ph, std::int64_t pw) {
    const std::int64_t ot = (s.t + 2 * pt - kt) / st + 1;
    const std::int64_t oh = (s.h + 2 * ph - kh) / sh + 1;
    const std::int64_t ow = (s.w + 2 * pw - kw) / sw + 1;
    if (ot < 1 || oh < 1 || ow < 1)
        throw ConfigError("conv: kernel/stride/padding give an empty output for input " + s.str());
    return Shape{s.n, ot, oh, ow, c_out};
}

namespace detail {

/// Repack kernel from [o][i][kt][kh][kw] to [off][g][i][o_local] so the inner
/// loops run over contiguous output channels.
template <typename T>
std::vector<T> pack_kernel(const ConvParams<T>& p) {
    const std::int64_t cig = p.in_channels / p.groups;
    const std::int64_t cog = p.out_channels / p.groups;
    const std::int64_t kvol = p.kernel_volume();
    std::vector<T> packed(p.kernel.size());
    for (std::int64_t o = 0; o < p.out_channels; ++o) {
        const std::int64_t g = o / cog;
        const std::int64_t ol = o % cog;
        for (std::int64_t i = 0; i < cig; ++i)
            for (std::int64_t off = 0; off < kvol; ++off)
                packed[((off * p.groups + g) * cig + i) * cog + ol] =
                    p.kernel[(o * cig + i) * kvol + off];
    }
    return packed;
}

template <typename T>
void unpack_kernel_grad(const ConvParams<T>& p, const std::vector<T>& packed,
                        std::vector<T>& grad) {
    const std::int64_t cig = p.in_channels / p.groups;
    const std::int64_t cog = p.out_channels / p.groups;
    const std::int64_t kvol = p.kernel_volume();
    for (std::int64_t o = 0; o < p.out_channels; ++o) {
        const std::int64_t g = o / cog;
        const std::int64_t ol = o % cog;
        for (std::int64_t i = 0; i < cig; ++i)
            for (std::int64_t off = 0; off < kvol; ++off)
                grad[(o * cig + i) * kvol + off] +=
                    packed[((off * p.groups + g) * cig + i) * cog + ol];
    }
}

} // namespace detail

template <typename T>
Tensor<T> conv(const Tensor<T>& x, const ConvParams<T>& p) {
    p.validate();
    const Shape s = x.shape;
    if (s.c != p.in_channels)
        throw DimensionError("conv: input has C=" + std::to_string(s.c) + ", kernel expects " +
                             std::to_string(p.in_channels));
    const Shape os = conv_output_shape(s, p.out_channels, p.kt, p.kh, p.kw, p.st, p.sh,
                                       p.sw, p.pt, p.ph, p.pw);
    const std::int64_t cig = p.in_channels / p.groups;
    const std::int64_t cog = p.out_channels / p.groups;
    const std::vector<T> packed = detail::pack_kernel(p);
    Tensor<T> out(os);

    parallel_for_ranges(s.n, [&](std::int64_t n0, std::int64_t n1, int) {
        for (std::int64_t n = n0; n < n1; ++n)
            for (std::int64_t t = 0; t < os.t; ++t)
                for (std::int64_t h = 0; h < os.h; ++h)
                    for (std::int64_t w = 0; w < os.w; ++w) {
                        T* acc = out.data.data() + out.index(n, t, h, w, 0);
                        if (!p.bias.empty())
                            std::copy_n(p.bias.data(), p.out_channels, acc);
                        for (std::int64_t dt = 0; dt < p.kt; ++dt) {
                            const std::int64_t it = t * p.st + dt - p.pt;
                            if (it < 0 || it >= s.t) continue;
                            for (std::int64_t dh = 0; dh < p.kh; ++dh) {
                                const std::int64_t ih = h * p.sh + dh - p.ph;
                                if (ih < 0 || ih >= s.h) continue;
                                for (std::int64_t dw = 0; dw < p.kw; ++dw) {
                                    const std::int64_t iw = w * p.sw + dw - p.pw;
                                    if (iw < 0 || iw >= s.w) continue;
                                    const std::int64_t off = (dt * p.kh + dh) * p.kw + dw;
                                    const T* __restrict__ px =
                                        x.data.data() + x.index(n, it, ih, iw, 0);
                                    const T* __restrict__ pk =
                                        packed.data() + off * p.in_channels * cog;
                                    for (std::int64_t g = 0; g < p.groups; ++g) {
                                        T* __restrict__ accg = acc + g * cog;
                                        for (std::int64_t i = 0; i < cig; ++i) {
                                            const T xv = px[g * cig + i];
                                            const T* __restrict__ row = pk + (g * cig + i) * cog;
                                            for (std::int64_t o = 0; o < cog; ++o)
                                                accg[o] += xv * row[o];
                                        }
                                    }
                                }
                            }
                        }
                    }
    });
    return out;
}

/// Returns the input gradient; kernel/bias gradients are accumulated into
/// gkernel/gbias (which must be sized like p.kernel / p.bias).
template <typename T>
Tensor<T> conv_backward(const Tensor<T>& x, const ConvParams<T>& p, const Tensor<T>& gy,
                        std::vector<T>& gkernel, std::vector<T>& gbias) {
    p.validate();
    const Shape s = x.shape;
    const Shape os = gy.shape;
    const std::int64_t cig = p.in_channels / p.groups;
    const std::int64_t cog = p.out_channels / p.groups;
    const std::vector<T> packed = detail::pack_kernel(p);
    Tensor<T> gx(s);
    if (gkernel.size() != p.kernel.size()) gkernel.assign(p.kernel.size(), T(0));
    if (gbias.size() != p.bias.size()) gbias.assign(p.bias.size(), T(0));

    // One packed kernel-gradient slab per sample keeps the reduction order
    // independent of the thread partition.
    std::vector<std::vector<T>> gk_per_n(s.n);
    std::vector<std::vector<T>> gb_per_n(s.n);

    parallel_for_ranges(s.n, [&](std::int64_t n0, std::int64_t n1, int) {
        for (std::int64_t n = n0; n < n1; ++n) {
            gk_per_n[n].assign(packed.size(), T(0));
            if (!p.bias.empty()) gb_per_n[n].assign(p.out_channels, T(0));
            T* gk = gk_per_n[n].data();
            for (std::int64_t t = 0; t < os.t; ++t)
                for (std::int64_t h = 0; h < os.h; ++h)
                    for (std::int64_t w = 0; w < os.w; ++w) {
                        const T* pg = gy.data.data() + gy.index(n, t, h, w, 0);
                        if (!p.bias.empty()) {
                            T* gb = gb_per_n[n].data();
                            for (std::int64_t o = 0; o < p.out_channels; ++o) gb[o] += pg[o];
                        }
                        for (std::int64_t dt = 0; dt < p.kt; ++dt) {
                            const std::int64_t it = t * p.st + dt - p.pt;
                            if (it < 0 || it >= s.t) continue;
                            for (std::int64_t dh = 0; dh < p.kh; ++dh) {
                                const std::int64_t ih = h * p.sh + dh - p.ph;
                                if (ih < 0 || ih >= s.h) continue;
                                for (std::int64_t dw = 0; dw < p.kw; ++dw) {
                                    const std::int64_t iw = w * p.sw + dw - p.pw;
                                    if (iw < 0 || iw >= s.w) continue;
                                    const std::int64_t off = (dt * p.kh + dh) * p.kw + dw;
                                    const T* __restrict__ px =
                                        x.data.data() + x.index(n, it, ih, iw, 0);
                                    T* __restrict__ pgx =
                                        gx.data.data() + gx.index(n, it, ih, iw, 0);
                                    const T* __restrict__ pk =
                                        packed.data() + off * p.in_channels * cog;
                                    T* __restrict__ pgk = gk + off * p.in_channels * cog;
                                    for (std::int64_t g = 0; g < p.groups; ++g) {
                                        const T* __restrict__ pgo = pg + g * cog;
                                        for (std::int64_t i = 0; i < cig; ++i) {
                                            const std::int64_t ci = g * cig + i;
                                            const T* __restrict__ row = pk + ci * cog;
                                            T* __restrict__ grow = pgk + ci * cog;
                                            const T xv = px[ci];
                                            T dot = 0;
                                            for (std::int64_t o = 0; o < cog; ++o)
                                                dot += row[o] * pgo[o];
                                            for (std::int64_t o = 0; o < cog; ++o)
                                                grow[o] += xv * pgo[o];
                                            pgx[ci] += dot;
                                        }
                                    }
                                }
                            }
                        }
                    }
        }
    });

    std::vector<T> gk_total(packed.size(), T(0));
    for (std::int64_t n = 0; n < s.n; ++n) {
        const auto& gk = gk_per_n[n];
        for (std::size_t i = 0; i < gk_total.size(); ++i) gk_total[i] += gk[i];
        if (!p.bias.empty())
            for (std::int64_t o = 0; o < p.out_channels; ++o) gbias[o] += gb_per_n[n][o];
    }
    detail::unpack_kernel_grad(p, gk_total, gkernel);
    return gx;
}

} // namespace gcv::ops
