#pragma once

// Naive straight-loop reference kernels. These are deliberately written as
// plain nested loops with no shortcuts so they can serve as an independent
// check of the production kernels. Nothing here is shared with the fast path.

#include <cmath>
#include <cstdint>
#include <vector>

#include "gcv/tensor.hpp"

namespace gcv::ref {

template <typename T>
Tensor<T> pool_global(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, 1, 1, 1, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t c = 0; c < s.c; ++c) {
            T acc = 0;
            for (std::int64_t t = 0; t < s.t; ++t)
                for (std::int64_t h = 0; h < s.h; ++h)
                    for (std::int64_t w = 0; w < s.w; ++w)
                        acc += x.at(n, t, h, w, c);
            out.at(n, 0, 0, 0, c) = acc / static_cast<T>(s.t * s.h * s.w);
        }
    return out;
}

template <typename T>
Tensor<T> pool_over_time(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, 1, s.h, s.w, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t h = 0; h < s.h; ++h)
            for (std::int64_t w = 0; w < s.w; ++w)
                for (std::int64_t c = 0; c < s.c; ++c) {
                    T acc = 0;
                    for (std::int64_t t = 0; t < s.t; ++t) acc += x.at(n, t, h, w, c);
                    out.at(n, 0, h, w, c) = acc / static_cast<T>(s.t);
                }
    return out;
}

template <typename T>
Tensor<T> pool_over_space(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, s.t, 1, 1, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t c = 0; c < s.c; ++c) {
                T acc = 0;
                for (std::int64_t h = 0; h < s.h; ++h)
                    for (std::int64_t w = 0; w < s.w; ++w) acc += x.at(n, t, h, w, c);
                out.at(n, t, 0, 0, c) = acc / static_cast<T>(s.h * s.w);
            }
    return out;
}

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const std::vector<T>& weight,
                          const std::vector<T>& bias, std::int64_t c_out) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, s.t, s.h, s.w, c_out});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w)
                    for (std::int64_t o = 0; o < c_out; ++o) {
                        T acc = bias.empty() ? T(0) : bias[o];
                        for (std::int64_t i = 0; i < s.c; ++i)
                            acc += weight[o * s.c + i] * x.at(n, t, h, w, i);
                        out.at(n, t, h, w, o) = acc;
                    }
    return out;
}

/// Cross-correlation with zero padding, arbitrary stride and channel groups.
/// kernel layout: [c_out][c_in/groups][kt][kh][kw].
template <typename T>
Tensor<T> conv(const Tensor<T>& x, const std::vector<T>& kernel,
               const std::vector<T>& bias, std::int64_t c_out, std::int64_t kt,
               std::int64_t kh, std::int64_t kw, std::int64_t st, std::int64_t sh,
               std::int64_t sw, std::int64_t pt, std::int64_t ph, std::int64_t pw,
               std::int64_t groups = 1) {
    const Shape s = x.shape;
    const std::int64_t cig = s.c / groups;
    const std::int64_t cog = c_out / groups;
    const std::int64_t ot = (s.t + 2 * pt - kt) / st + 1;
    const std::int64_t oh = (s.h + 2 * ph - kh) / sh + 1;
    const std::int64_t ow = (s.w + 2 * pw - kw) / sw + 1;
    Tensor<T> out(Shape{s.n, ot, oh, ow, c_out});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < ot; ++t)
            for (std::int64_t h = 0; h < oh; ++h)
                for (std::int64_t w = 0; w < ow; ++w)
                    for (std::int64_t o = 0; o < c_out; ++o) {
                        const std::int64_t g = o / cog;
                        T acc = bias.empty() ? T(0) : bias[o];
                        for (std::int64_t dt = 0; dt < kt; ++dt)
                            for (std::int64_t dh = 0; dh < kh; ++dh)
                                for (std::int64_t dw = 0; dw < kw; ++dw) {
                                    const std::int64_t it = t * st + dt - pt;
                                    const std::int64_t ih = h * sh + dh - ph;
                                    const std::int64_t iw = w * sw + dw - pw;
                                    if (it < 0 || it >= s.t || ih < 0 || ih >= s.h ||
                                        iw < 0 || iw >= s.w)
                                        continue;
                                    for (std::int64_t i = 0; i < cig; ++i)
                                        acc += kernel[(((o * cig + i) * kt + dt) * kh + dh) * kw + dw] *
                                               x.at(n, it, ih, iw, g * cig + i);
                                }
                        out.at(n, t, h, w, o) = acc;
                    }
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
    return out;
}

/// Explicit expand-then-multiply: materializes the broadcast gate.
template <typename T>
Tensor<T> gate_apply(const Tensor<T>& x, const Tensor<T>& g) {
    const Shape s = x.shape;
    const Shape gs = g.shape;
    Tensor<T> expanded(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w)
                    for (std::int64_t c = 0; c < s.c; ++c)
                        expanded.at(n, t, h, w, c) =
                            g.at(gs.n == 1 ? 0 : n, gs.t == 1 ? 0 : t, gs.h == 1 ? 0 : h,
                                 gs.w == 1 ? 0 : w, gs.c == 1 ? 0 : c);
    Tensor<T> out(s);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = expanded.data[i] * x.data[i];
    return out;
}

template <typename T>
Tensor<T> temporal_shift(const Tensor<T>& x, std::int64_t fold) {
    const Shape s = x.shape;
    Tensor<T> out(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w)
                    for (std::int64_t c = 0; c < s.c; ++c) {
                        T v;
                        if (c < fold)
                            v = (t - 1 >= 0) ? x.at(n, t - 1, h, w, c) : T(0);
                        else if (c < 2 * fold)
                            v = (t + 1 < s.t) ? x.at(n, t + 1, h, w, c) : T(0);
                        else
                            v = x.at(n, t, h, w, c);
                        out.at(n, t, h, w, c) = v;
                    }
    return out;
}

/// Two-pass per-channel moments; train-mode normalization only (no running
/// stats side effects).
template <typename T>
Tensor<T> batch_norm_train(const Tensor<T>& x, const std::vector<T>& gamma,
                           const std::vector<T>& beta, T eps) {
    const Shape s = x.shape;
    const std::int64_t count = s.n * s.t * s.h * s.w;
    Tensor<T> out(s);
    for (std::int64_t c = 0; c < s.c; ++c) {
        T mean = 0;
        for (std::int64_t n = 0; n < s.n; ++n)
            for (std::int64_t t = 0; t < s.t; ++t)
                for (std::int64_t h = 0; h < s.h; ++h)
                    for (std::int64_t w = 0; w < s.w; ++w) mean += x.at(n, t, h, w, c);
        mean /= static_cast<T>(count);
        T var = 0;
        for (std::int64_t n = 0; n < s.n; ++n)
            for (std::int64_t t = 0; t < s.t; ++t)
                for (std::int64_t h = 0; h < s.h; ++h)
                    for (std::int64_t w = 0; w < s.w; ++w) {
                        T d = x.at(n, t, h, w, c) - mean;
                        var += d * d;
                    }
        var /= static_cast<T>(count);
        const T inv = T(1) / std::sqrt(var + eps);
        for (std::int64_t n = 0; n < s.n; ++n)
            for (std::int64_t t = 0; t < s.t; ++t)
                for (std::int64_t h = 0; h < s.h; ++h)
                    for (std::int64_t w = 0; w < s.w; ++w)
                        out.at(n, t, h, w, c) =
                            gamma[c] * (x.at(n, t, h, w, c) - mean) * inv + beta[c];
    }
    return out;
}

template <typename T>
Tensor<T> batch_norm_eval(const Tensor<T>& x, const std::vector<T>& gamma,
                          const std::vector<T>& beta, const std::vector<T>& mean,
                          const std::vector<T>& var, T eps) {
    const Shape s = x.shape;
    Tensor<T> out(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w)
                    for (std::int64_t c = 0; c < s.c; ++c)
                        out.at(n, t, h, w, c) =
                            gamma[c] * (x.at(n, t, h, w, c) - mean[c]) /
                                std::sqrt(var[c] + eps) +
                            beta[c];
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> max_pool_spatial(const Tensor<T>& x, std::int64_t k, std::int64_t stride,
                           std::int64_t pad) {
    const Shape s = x.shape;
    const std::int64_t oh = (s.h + 2 * pad - k) / stride + 1;
    const std::int64_t ow = (s.w + 2 * pad - k) / stride + 1;
    Tensor<T> out(Shape{s.n, s.t, oh, ow, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < oh; ++h)
                for (std::int64_t w = 0; w < ow; ++w)
                    for (std::int64_t c = 0; c < s.c; ++c) {
                        T best = 0;
                        bool found = false;
                        for (std::int64_t dh = 0; dh < k; ++dh)
                            for (std::int64_t dw = 0; dw < k; ++dw) {
                                const std::int64_t ih = h * stride + dh - pad;
                                const std::int64_t iw = w * stride + dw - pad;
                                if (ih < 0 || ih >= s.h || iw < 0 || iw >= s.w) continue;
                                T v = x.at(n, t, ih, iw, c);
                                if (!found || v > best) {
                                    best = v;
                                    found = true;
                                }
                            }
                        out.at(n, t, h, w, c) = found ? best : T(0);
                    }
    return out;
}

/// Nearest-neighbour spatial upsample to the requested extents.
template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, std::int64_t oh, std::int64_t ow) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, s.t, oh, ow, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < oh; ++h)
                for (std::int64_t w = 0; w < ow; ++w) {
                    const std::int64_t ih = h * s.h / oh;
                    const std::int64_t iw = w * s.w / ow;
                    for (std::int64_t c = 0; c < s.c; ++c)
                        out.at(n, t, h, w, c) = x.at(n, t, ih, iw, c);
                }
    return out;
}

} // namespace gcv::ref
