#pragma once

// Differentiable kernels on rank-5 tensors. Each forward has a matching
// backward that maps the output gradient to input (and parameter) gradients.
// All reductions run in a fixed order so results are bit-reproducible.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gcv/tensor.hpp"

namespace gcv::ops {

// ---------------------------------------------------------------------------
// pooling

template <typename T>
Tensor<T> pool_global(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, 1, 1, 1, s.c});
    const std::int64_t sites = s.t * s.h * s.w;
    const T scale = T(1) / static_cast<T>(sites);
    for (std::int64_t n = 0; n < s.n; ++n) {
        const T* px = x.data.data() + n * sites * s.c;
        T* po = out.data.data() + n * s.c;
        for (std::int64_t i = 0; i < sites; ++i)
            for (std::int64_t c = 0; c < s.c; ++c) po[c] += px[i * s.c + c];
        for (std::int64_t c = 0; c < s.c; ++c) po[c] *= scale;
    }
    return out;
}

template <typename T>
Tensor<T> pool_global_backward(const Tensor<T>& gy, const Shape& in_shape) {
    Tensor<T> gx(in_shape);
    const std::int64_t sites = in_shape.t * in_shape.h * in_shape.w;
    const T scale = T(1) / static_cast<T>(sites);
    for (std::int64_t n = 0; n < in_shape.n; ++n) {
        const T* pg = gy.data.data() + n * in_shape.c;
        T* px = gx.data.data() + n * sites * in_shape.c;
        for (std::int64_t i = 0; i < sites; ++i)
            for (std::int64_t c = 0; c < in_shape.c; ++c) px[i * in_shape.c + c] = pg[c] * scale;
    }
    return gx;
}

template <typename T>
Tensor<T> pool_over_time(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, 1, s.h, s.w, s.c});
    const std::int64_t frame = s.h * s.w * s.c;
    const T scale = T(1) / static_cast<T>(s.t);
    for (std::int64_t n = 0; n < s.n; ++n) {
        T* po = out.data.data() + n * frame;
        for (std::int64_t t = 0; t < s.t; ++t) {
            const T* px = x.data.data() + (n * s.t + t) * frame;
            for (std::int64_t i = 0; i < frame; ++i) po[i] += px[i];
        }
        for (std::int64_t i = 0; i < frame; ++i) po[i] *= scale;
    }
    return out;
}

template <typename T>
Tensor<T> pool_over_time_backward(const Tensor<T>& gy, const Shape& in_shape) {
    Tensor<T> gx(in_shape);
    const std::int64_t frame = in_shape.h * in_shape.w * in_shape.c;
    const T scale = T(1) / static_cast<T>(in_shape.t);
    for (std::int64_t n = 0; n < in_shape.n; ++n) {
        const T* pg = gy.data.data() + n * frame;
        for (std::int64_t t = 0; t < in_shape.t; ++t) {
            T* px = gx.data.data() + (n * in_shape.t + t) * frame;
            for (std::int64_t i = 0; i < frame; ++i) px[i] = pg[i] * scale;
        }
    }
    return gx;
}

template <typename T>
Tensor<T> pool_over_space(const Tensor<T>& x) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, s.t, 1, 1, s.c});
    const std::int64_t sites = s.h * s.w;
    const T scale = T(1) / static_cast<T>(sites);
    for (std::int64_t nt = 0; nt < s.n * s.t; ++nt) {
        const T* px = x.data.data() + nt * sites * s.c;
        T* po = out.data.data() + nt * s.c;
        for (std::int64_t i = 0; i < sites; ++i)
            for (std::int64_t c = 0; c < s.c; ++c) po[c] += px[i * s.c + c];
        for (std::int64_t c = 0; c < s.c; ++c) po[c] *= scale;
    }
    return out;
}

template <typename T>
Tensor<T> pool_over_space_backward(const Tensor<T>& gy, const Shape& in_shape) {
    Tensor<T> gx(in_shape);
    const std::int64_t sites = in_shape.h * in_shape.w;
    const T scale = T(1) / static_cast<T>(sites);
    for (std::int64_t nt = 0; nt < in_shape.n * in_shape.t; ++nt) {
        const T* pg = gy.data.data() + nt * in_shape.c;
        T* px = gx.data.data() + nt * sites * in_shape.c;
        for (std::int64_t i = 0; i < sites; ++i)
            for (std::int64_t c = 0; c < in_shape.c; ++c) px[i * in_shape.c + c] = pg[c] * scale;
    }
    return gx;
}

// ---------------------------------------------------------------------------
// fully connected: weight [c_out][c_in], applied along the channel axis of a
// [N,1,1,1,C] tensor.

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const std::vector<T>& weight,
                          const std::vector<T>& bias, std::int64_t c_out) {
    const Shape s = x.shape;
    if (s.t != 1 || s.h != 1 || s.w != 1)
        throw DimensionError("fully_connected expects pooled input, got " + s.str());
    if (static_cast<std::int64_t>(weight.size()) != c_out * s.c)
        throw DimensionError("fully_connected weight does not match C_in=" +
                             std::to_string(s.c));
    Tensor<T> out(Shape{s.n, 1, 1, 1, c_out});
    for (std::int64_t n = 0; n < s.n; ++n) {
        const T* px = x.data.data() + n * s.c;
        T* po = out.data.data() + n * c_out;
        for (std::int64_t o = 0; o < c_out; ++o) {
            T acc = bias.empty() ? T(0) : bias[o];
            const T* pw = weight.data() + o * s.c;
            for (std::int64_t i = 0; i < s.c; ++i) acc += pw[i] * px[i];
            po[o] = acc;
        }
    }
    return out;
}

template <typename T>
Tensor<T> fully_connected_backward(const Tensor<T>& x, const std::vector<T>& weight,
                                   std::int64_t c_out, const Tensor<T>& gy,
                                   std::vector<T>& gweight, std::vector<T>& gbias) {
    const Shape s = x.shape;
    Tensor<T> gx(s);
    gweight.assign(weight.size(), T(0));
    gbias.assign(c_out, T(0));
    for (std::int64_t n = 0; n < s.n; ++n) {
        const T* px = x.data.data() + n * s.c;
        const T* pg = gy.data.data() + n * c_out;
        T* pgx = gx.data.data() + n * s.c;
        for (std::int64_t o = 0; o < c_out; ++o) {
            const T g = pg[o];
            gbias[o] += g;
            const T* pw = weight.data() + o * s.c;
            T* pgw = gweight.data() + o * s.c;
            for (std::int64_t i = 0; i < s.c; ++i) {
                pgx[i] += pw[i] * g;
                pgw[i] += px[i] * g;
            }
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// elementwise

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const T v = x.data[i];
        // Split by sign so large |v| never overflows exp.
        out.data[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                                : std::exp(v) / (T(1) + std::exp(v));
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& gy) {
    Tensor<T> gx(y.shape);
    for (std::size_t i = 0; i < y.data.size(); ++i)
        gx.data[i] = gy.data[i] * y.data[i] * (T(1) - y.data[i]);
    return gx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> out(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
    return out;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& gy) {
    Tensor<T> gx(x.shape);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        gx.data[i] = x.data[i] > T(0) ? gy.data[i] : T(0);
    return gx;
}

// ---------------------------------------------------------------------------
// gating: g broadcasts against x (every g extent is 1 or matches x).

template <typename T>
void check_broadcast(const Shape& xs, const Shape& gs) {
    auto ok = [](std::int64_t g, std::int64_t x) { return g == 1 || g == x; };
    if (!ok(gs.n, xs.n) || !ok(gs.t, xs.t) || !ok(gs.h, xs.h) || !ok(gs.w, xs.w) ||
        !ok(gs.c, xs.c))
        throw DimensionError("gate shape " + gs.str() + " does not broadcast to " + xs.str());
}

template <typename T>
Tensor<T> gate_apply(const Tensor<T>& x, const Tensor<T>& g) {
    const Shape s = x.shape;
    const Shape gs = g.shape;
    check_broadcast<T>(s, gs);
    Tensor<T> out(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w) {
                    const T* pg = g.data.data() +
                                  g.index(gs.n == 1 ? 0 : n, gs.t == 1 ? 0 : t,
                                          gs.h == 1 ? 0 : h, gs.w == 1 ? 0 : w, 0);
                    const T* px = x.data.data() + x.index(n, t, h, w, 0);
                    T* po = out.data.data() + x.index(n, t, h, w, 0);
                    if (gs.c == 1)
                        for (std::int64_t c = 0; c < s.c; ++c) po[c] = px[c] * pg[0];
                    else
                        for (std::int64_t c = 0; c < s.c; ++c) po[c] = px[c] * pg[c];
                }
    return out;
}

/// Gradients for both factors; the gate gradient sums over broadcast axes.
template <typename T>
Tensor<T> gate_apply_backward(const Tensor<T>& x, const Tensor<T>& g,
                              const Tensor<T>& gy, Tensor<T>& ggate) {
    const Shape s = x.shape;
    const Shape gs = g.shape;
    Tensor<T> gx(s);
    ggate = Tensor<T>(gs);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w) {
                    const std::int64_t gi =
                        g.index(gs.n == 1 ? 0 : n, gs.t == 1 ? 0 : t, gs.h == 1 ? 0 : h,
                                gs.w == 1 ? 0 : w, 0);
                    const std::int64_t xi = x.index(n, t, h, w, 0);
                    for (std::int64_t c = 0; c < s.c; ++c) {
                        const std::int64_t gc = gs.c == 1 ? gi : gi + c;
                        gx.data[xi + c] = gy.data[xi + c] * g.data[gc];
                        ggate.data[gc] += gy.data[xi + c] * x.data[xi + c];
                    }
                }
    return gx;
}

// ---------------------------------------------------------------------------
// channel split / concat

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x,
                                      const std::vector<std::int64_t>& sizes) {
    const Shape s = x.shape;
    std::int64_t sum = 0;
    for (auto v : sizes) sum += v;
    if (sum != s.c)
        throw DimensionError("split sizes sum to " + std::to_string(sum) + ", C is " +
                             std::to_string(s.c));
    std::vector<Tensor<T>> parts;
    parts.reserve(sizes.size());
    std::int64_t offset = 0;
    const std::int64_t sites = s.n * s.t * s.h * s.w;
    for (auto sz : sizes) {
        Tensor<T> part(Shape{s.n, s.t, s.h, s.w, sz});
        for (std::int64_t i = 0; i < sites; ++i)
            std::copy_n(x.data.data() + i * s.c + offset, sz,
                        part.data.data() + i * sz);
        offset += sz;
        parts.push_back(std::move(part));
    }
    return parts;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
    if (parts.empty()) throw DimensionError("concat_channels: no parts");
    Shape base = parts.front().shape;
    std::int64_t c_total = 0;
    for (const auto& p : parts) {
        if (p.shape.n != base.n || p.shape.t != base.t || p.shape.h != base.h ||
            p.shape.w != base.w)
            throw DimensionError("concat_channels: parts disagree on N,T,H,W");
        c_total += p.shape.c;
    }
    Tensor<T> out(Shape{base.n, base.t, base.h, base.w, c_total});
    const std::int64_t sites = base.n * base.t * base.h * base.w;
    std::int64_t offset = 0;
    for (const auto& p : parts) {
        const std::int64_t sz = p.shape.c;
        for (std::int64_t i = 0; i < sites; ++i)
            std::copy_n(p.data.data() + i * sz, sz, out.data.data() + i * c_total + offset);
        offset += sz;
    }
    return out;
}

// ---------------------------------------------------------------------------
// temporal shift: first `fold` channels move one step forward in time, the
// next `fold` one step backward, both zero-filled at the boundary.

inline std::int64_t shift_fold(std::int64_t channels, double fold_ratio) {
    const auto fold = static_cast<std::int64_t>(channels * fold_ratio);
    if (fold < 0 || 2 * fold > channels)
        throw ConfigError("temporal_shift: 2*fold exceeds channel count");
    return fold;
}

template <typename T>
Tensor<T> temporal_shift(const Tensor<T>& x, std::int64_t fold) {
    const Shape s = x.shape;
    if (fold < 0 || 2 * fold > s.c)
        throw ConfigError("temporal_shift: 2*fold exceeds channel count");
    if (fold == 0) return x;
    Tensor<T> out(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w) {
                    T* po = out.data.data() + out.index(n, t, h, w, 0);
                    for (std::int64_t c = 0; c < fold; ++c)
                        po[c] = t > 0 ? x.at(n, t - 1, h, w, c) : T(0);
                    for (std::int64_t c = fold; c < 2 * fold; ++c)
                        po[c] = t + 1 < s.t ? x.at(n, t + 1, h, w, c) : T(0);
                    const T* px = x.data.data() + x.index(n, t, h, w, 0);
                    for (std::int64_t c = 2 * fold; c < s.c; ++c) po[c] = px[c];
                }
    return out;
}

/// The adjoint of a shift is the opposite shift.
template <typename T>
Tensor<T> temporal_shift_backward(const Tensor<T>& gy, std::int64_t fold) {
    const Shape s = gy.shape;
    if (fold == 0) return gy;
    Tensor<T> gx(s);
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h)
                for (std::int64_t w = 0; w < s.w; ++w) {
                    T* pg = gx.data.data() + gx.index(n, t, h, w, 0);
                    for (std::int64_t c = 0; c < fold; ++c)
                        pg[c] = t + 1 < s.t ? gy.at(n, t + 1, h, w, c) : T(0);
                    for (std::int64_t c = fold; c < 2 * fold; ++c)
                        pg[c] = t > 0 ? gy.at(n, t - 1, h, w, c) : T(0);
                    const T* py = gy.data.data() + gy.index(n, t, h, w, 0);
                    for (std::int64_t c = 2 * fold; c < s.c; ++c) pg[c] = py[c];
                }
    return gx;
}

// ---------------------------------------------------------------------------
// batch normalization over (N,T,H,W) per channel

enum class BnMode { train, eval };

template <typename T>
struct BatchNormParams {
    std::vector<T> gamma, beta, running_mean, running_var;
    T eps{static_cast<T>(1e-5)};
    T momentum{static_cast<T>(0.1)};
    BnMode mode{BnMode::eval};

    explicit BatchNormParams(std::int64_t c = 0)
        : gamma(c, T(1)), beta(c, T(0)), running_mean(c, T(0)), running_var(c, T(1)) {}
};

template <typename T>
struct BatchNormCache {
    std::vector<T> mean, inv_std; // per channel, as used in the forward pass
    Tensor<T> xhat;               // normalized input
    BnMode mode{BnMode::train};
};

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, BatchNormParams<T>& p,
                     BatchNormCache<T>* cache = nullptr) {
    const Shape s = x.shape;
    const std::int64_t C = s.c;
    if (static_cast<std::int64_t>(p.gamma.size()) != C)
        throw DimensionError("batch_norm: parameter length != C");
    const std::int64_t count = s.n * s.t * s.h * s.w;
    std::vector<T> mean(C, T(0)), var(C, T(0));
    if (p.mode == BnMode::train) {
        for (std::int64_t i = 0; i < count; ++i) {
            const T* px = x.data.data() + i * C;
            for (std::int64_t c = 0; c < C; ++c) mean[c] += px[c];
        }
        for (std::int64_t c = 0; c < C; ++c) mean[c] /= static_cast<T>(count);
        for (std::int64_t i = 0; i < count; ++i) {
            const T* px = x.data.data() + i * C;
            for (std::int64_t c = 0; c < C; ++c) {
                const T d = px[c] - mean[c];
                var[c] += d * d;
            }
        }
        for (std::int64_t c = 0; c < C; ++c) var[c] /= static_cast<T>(count);
        // Running stats use the unbiased variance, as is conventional.
        const T unbias = count > 1 ? static_cast<T>(count) / static_cast<T>(count - 1) : T(1);
        for (std::int64_t c = 0; c < C; ++c) {
            p.running_mean[c] = (T(1) - p.momentum) * p.running_mean[c] + p.momentum * mean[c];
            p.running_var[c] =
                (T(1) - p.momentum) * p.running_var[c] + p.momentum * var[c] * unbias;
        }
    } else {
        mean = p.running_mean;
        var = p.running_var;
    }
    std::vector<T> inv_std(C);
    for (std::int64_t c = 0; c < C; ++c) inv_std[c] = T(1) / std::sqrt(var[c] + p.eps);
    Tensor<T> out(s);
    Tensor<T> xhat_store;
    const bool want_cache = cache != nullptr;
    if (want_cache) xhat_store = Tensor<T>(s);
    for (std::int64_t i = 0; i < count; ++i) {
        const T* px = x.data.data() + i * C;
        T* po = out.data.data() + i * C;
        for (std::int64_t c = 0; c < C; ++c) {
            const T xh = (px[c] - mean[c]) * inv_std[c];
            if (want_cache) xhat_store.data[i * C + c] = xh;
            po[c] = p.gamma[c] * xh + p.beta[c];
        }
    }
    if (want_cache) {
        cache->mean = std::move(mean);
        cache->inv_std = std::move(inv_std);
        cache->xhat = std::move(xhat_store);
        cache->mode = p.mode;
    }
    return out;
}

/// Train-mode backward differentiates through the batch statistics; eval mode
/// treats the running stats as constants.
template <typename T>
Tensor<T> batch_norm_backward(const BatchNormParams<T>& p, const BatchNormCache<T>& cache,
                              const Tensor<T>& gy, std::vector<T>& ggamma,
                              std::vector<T>& gbeta) {
    const Shape s = gy.shape;
    const std::int64_t C = s.c;
    const std::int64_t count = s.n * s.t * s.h * s.w;
    ggamma.assign(C, T(0));
    gbeta.assign(C, T(0));
    for (std::int64_t i = 0; i < count; ++i) {
        const T* pg = gy.data.data() + i * C;
        const T* ph = cache.xhat.data.data() + i * C;
        for (std::int64_t c = 0; c < C; ++c) {
            ggamma[c] += pg[c] * ph[c];
            gbeta[c] += pg[c];
        }
    }
    Tensor<T> gx(s);
    if (cache.mode == BnMode::eval) {
        for (std::int64_t i = 0; i < count; ++i) {
            const T* pg = gy.data.data() + i * C;
            T* px = gx.data.data() + i * C;
            for (std::int64_t c = 0; c < C; ++c)
                px[c] = pg[c] * p.gamma[c] * cache.inv_std[c];
        }
        return gx;
    }
    const T inv_count = T(1) / static_cast<T>(count);
    for (std::int64_t i = 0; i < count; ++i) {
        const T* pg = gy.data.data() + i * C;
        const T* ph = cache.xhat.data.data() + i * C;
        T* px = gx.data.data() + i * C;
        for (std::int64_t c = 0; c < C; ++c)
            px[c] = p.gamma[c] * cache.inv_std[c] *
                    (pg[c] - inv_count * gbeta[c] - inv_count * ph[c] * ggamma[c]);
    }
    return gx;
}

// ---------------------------------------------------------------------------
// spatial max pooling (backbone stem)

template <typename T>
Tensor<T> max_pool_spatial(const Tensor<T>& x, std::int64_t k, std::int64_t stride,
                           std::int64_t pad, std::vector<std::int64_t>* argmax = nullptr) {
    const Shape s = x.shape;
    const std::int64_t oh = (s.h + 2 * pad - k) / stride + 1;
    const std::int64_t ow = (s.w + 2 * pad - k) / stride + 1;
    if (oh < 1 || ow < 1) throw ConfigError("max_pool_spatial: empty output");
    Tensor<T> out(Shape{s.n, s.t, oh, ow, s.c});
    if (argmax) argmax->assign(out.numel(), -1);
    std::int64_t oi = 0;
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < oh; ++h)
                for (std::int64_t w = 0; w < ow; ++w, oi += s.c)
                    for (std::int64_t c = 0; c < s.c; ++c) {
                        T best = T(0);
                        std::int64_t best_idx = -1;
                        for (std::int64_t dh = 0; dh < k; ++dh)
                            for (std::int64_t dw = 0; dw < k; ++dw) {
                                const std::int64_t ih = h * stride + dh - pad;
                                const std::int64_t iw = w * stride + dw - pad;
                                if (ih < 0 || ih >= s.h || iw < 0 || iw >= s.w) continue;
                                const std::int64_t idx = x.index(n, t, ih, iw, c);
                                if (best_idx < 0 || x.data[idx] > best) {
                                    best = x.data[idx];
                                    best_idx = idx;
                                }
                            }
                        out.data[oi + c] = best_idx >= 0 ? best : T(0);
                        if (argmax) (*argmax)[oi + c] = best_idx;
                    }
    return out;
}

template <typename T>
Tensor<T> max_pool_spatial_backward(const Tensor<T>& gy, const Shape& in_shape,
                                    const std::vector<std::int64_t>& argmax) {
    Tensor<T> gx(in_shape);
    for (std::size_t i = 0; i < gy.data.size(); ++i)
        if (argmax[i] >= 0) gx.data[argmax[i]] += gy.data[i];
    return gx;
}

// ---------------------------------------------------------------------------
// nearest-neighbour spatial upsample (gather-excite style gate maps)

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, std::int64_t oh, std::int64_t ow) {
    const Shape s = x.shape;
    Tensor<T> out(Shape{s.n, s.t, oh, ow, s.c});
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < oh; ++h) {
                const std::int64_t ih = h * s.h / oh;
                for (std::int64_t w = 0; w < ow; ++w) {
                    const std::int64_t iw = w * s.w / ow;
                    std::copy_n(x.data.data() + x.index(n, t, ih, iw, 0), s.c,
                                out.data.data() + out.index(n, t, h, w, 0));
                }
            }
    return out;
}

template <typename T>
Tensor<T> upsample_nearest_backward(const Tensor<T>& gy, const Shape& in_shape) {
    Tensor<T> gx(in_shape);
    const Shape s = gy.shape;
    for (std::int64_t n = 0; n < s.n; ++n)
        for (std::int64_t t = 0; t < s.t; ++t)
            for (std::int64_t h = 0; h < s.h; ++h) {
                const std::int64_t ih = h * in_shape.h / s.h;
                for (std::int64_t w = 0; w < s.w; ++w) {
                    const std::int64_t iw = w * in_shape.w / s.w;
                    const T* pg = gy.data.data() + gy.index(n, t, h, w, 0);
                    T* px = gx.data.data() + gx.index(n, t, ih, iw, 0);
                    for (std::int64_t c = 0; c < s.c; ++c) px[c] += pg[c];
                }
            }
    return gx;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy head (training loss)

/// Returns mean loss over the batch; grad_logits receives d(loss)/d(logits).
template <typename T>
T softmax_cross_entropy(const std::vector<T>& logits, std::int64_t n,
                        std::int64_t classes, const std::vector<int>& labels,
                        std::vector<T>* grad_logits = nullptr) {
    if (grad_logits) grad_logits->assign(logits.size(), T(0));
    T total = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const T* row = logits.data() + i * classes;
        T mx = row[0];
        for (std::int64_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
        T denom = 0;
        for (std::int64_t c = 0; c < classes; ++c) denom += std::exp(row[c] - mx);
        const T logdenom = std::log(denom) + mx;
        total += logdenom - row[labels[i]];
        if (grad_logits) {
            T* g = grad_logits->data() + i * classes;
            for (std::int64_t c = 0; c < classes; ++c)
                g[c] = std::exp(row[c] - logdenom) / static_cast<T>(n);
            g[labels[i]] -= T(1) / static_cast<T>(n);
        }
    }
    return total / static_cast<T>(n);
}

} // namespace gcv::ops
