#pragma once

// Thin stateful wrappers over the kernels in ops.hpp / conv.hpp. Each layer
// owns its parameters and gradient buffers and, when run with training=true,
// caches whatever its backward pass needs.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gcv/conv.hpp"
#include "gcv/ops.hpp"
#include "gcv/rng.hpp"
#include "gcv/tensor.hpp"

namespace gcv::nn {

/// Callback for enumerating parameters: logical dims are the natural extents
/// of the buffer (e.g. [C_out, C_in, kT, kH, kW] for a conv kernel).
template <typename T>
using ParamVisitor = std::function<void(
    const std::string& name, const std::vector<std::int64_t>& dims,
    std::vector<T>& value, std::vector<T>& grad)>;

/// Buffers that are state but not learnable (batch-norm running stats).
template <typename T>
using BufferVisitor = std::function<void(const std::string& name,
                                         const std::vector<std::int64_t>& dims,
                                         std::vector<T>& value)>;

template <typename T>
class Conv3d {
  public:
    Conv3d() = default;
    explicit Conv3d(ops::ConvParams<T> params) : p(std::move(params)) {
        kernel_grad.assign(p.kernel.size(), T(0));
        bias_grad.assign(p.bias.size(), T(0));
    }

    /// He fan-in normal for the kernel, zero bias.
    void init_he(Rng& rng) {
        const double fan_in =
            static_cast<double>((p.in_channels / p.groups) * p.kernel_volume());
        const double stddev = std::sqrt(2.0 / fan_in);
        for (auto& v : p.kernel) v = static_cast<T>(rng.normal(0.0, stddev));
        std::fill(p.bias.begin(), p.bias.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (training) x_cache_ = x;
        return ops::conv(x, p);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        return ops::conv_backward(x_cache_, p, gy, kernel_grad, bias_grad);
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& v) {
        v(prefix + ".kernel",
          {p.out_channels, p.in_channels / p.groups, p.kt, p.kh, p.kw}, p.kernel,
          kernel_grad);
        if (!p.bias.empty()) v(prefix + ".bias", {p.out_channels}, p.bias, bias_grad);
    }

    ops::ConvParams<T> p;
    std::vector<T> kernel_grad, bias_grad;

  private:
    Tensor<T> x_cache_;
};

template <typename T>
class Linear {
  public:
    Linear() = default;
    Linear(std::int64_t c_in, std::int64_t c_out, bool with_bias = true)
        : in_channels(c_in), out_channels(c_out), weight(c_in * c_out, T(0)) {
        if (with_bias) bias.assign(c_out, T(0));
        weight_grad.assign(weight.size(), T(0));
        bias_grad.assign(bias.size(), T(0));
    }

    void init_he(Rng& rng) {
        const double stddev = std::sqrt(2.0 / static_cast<double>(in_channels));
        for (auto& v : weight) v = static_cast<T>(rng.normal(0.0, stddev));
        std::fill(bias.begin(), bias.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (training) x_cache_ = x;
        return ops::fully_connected(x, weight, bias, out_channels);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        std::vector<T> gw, gb;
        auto gx = ops::fully_connected_backward(x_cache_, weight, out_channels, gy, gw, gb);
        for (std::size_t i = 0; i < weight_grad.size(); ++i) weight_grad[i] += gw[i];
        for (std::size_t i = 0; i < bias_grad.size(); ++i) bias_grad[i] += gb[i];
        return gx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& v) {
        v(prefix + ".weight", {out_channels, in_channels}, weight, weight_grad);
        if (!bias.empty()) v(prefix + ".bias", {out_channels}, bias, bias_grad);
    }

    std::int64_t in_channels{0}, out_channels{0};
    std::vector<T> weight, bias;
    std::vector<T> weight_grad, bias_grad;

  private:
    Tensor<T> x_cache_;
};

template <typename T>
class BatchNorm {
  public:
    BatchNorm() = default;
    explicit BatchNorm(std::int64_t c) : p(c) {
        gamma_grad.assign(c, T(0));
        beta_grad.assign(c, T(0));
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        return ops::batch_norm(x, p, training ? &cache_ : nullptr);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        std::vector<T> gg, gb;
        auto gx = ops::batch_norm_backward(p, cache_, gy, gg, gb);
        for (std::size_t i = 0; i < gamma_grad.size(); ++i) gamma_grad[i] += gg[i];
        for (std::size_t i = 0; i < beta_grad.size(); ++i) beta_grad[i] += gb[i];
        return gx;
    }

    void visit(const std::string& prefix, const ParamVisitor<T>& v) {
        const std::int64_t c = static_cast<std::int64_t>(p.gamma.size());
        v(prefix + ".gamma", {c}, p.gamma, gamma_grad);
        v(prefix + ".beta", {c}, p.beta, beta_grad);
    }

    void visit_buffers(const std::string& prefix, const BufferVisitor<T>& v) {
        const std::int64_t c = static_cast<std::int64_t>(p.gamma.size());
        v(prefix + ".running_mean", {c}, p.running_mean);
        v(prefix + ".running_var", {c}, p.running_var);
    }

    ops::BatchNormParams<T> p;
    std::vector<T> gamma_grad, beta_grad;

  private:
    ops::BatchNormCache<T> cache_;
};

template <typename T>
class Relu {
  public:
    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (training) x_cache_ = x;
        return ops::relu(x);
    }
    Tensor<T> backward(const Tensor<T>& gy) { return ops::relu_backward(x_cache_, gy); }

  private:
    Tensor<T> x_cache_;
};

template <typename T>
class MaxPool {
  public:
    MaxPool() = default;
    MaxPool(std::int64_t k, std::int64_t stride, std::int64_t pad)
        : k_(k), stride_(stride), pad_(pad) {}

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        in_shape_ = x.shape;
        return ops::max_pool_spatial(x, k_, stride_, pad_, training ? &argmax_ : nullptr);
    }
    Tensor<T> backward(const Tensor<T>& gy) {
        return ops::max_pool_spatial_backward(gy, in_shape_, argmax_);
    }

  private:
    std::int64_t k_{3}, stride_{2}, pad_{1};
    Shape in_shape_;
    std::vector<std::int64_t> argmax_;
};

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
    if (!(dst.shape == src.shape)) throw DimensionError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

} // namespace gcv::nn
