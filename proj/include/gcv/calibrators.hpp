#pragma once

// The element-wise calibrator family. Every calibrator derives a gate tensor
// in (0,1) from an axial context of its input and multiplies it back onto the
// input:
//
//   ecal_g   pool over (T,H,W) -> FC          -> gate per channel
//   ecal_s   pool over T       -> 3x3 conv    -> gate per (H,W,C)
//   ecal_t   pool over (H,W)   -> 3x1x1 conv  -> gate per (T,C)
//   ecal_l   no pooling        -> 3x1x1 conv  -> gate per element
//
// plus the comparison calibrators: se3d (squeeze-excite bottleneck FC pair),
// ge3d_g (parameter-free global gate), ge3d_c (strided depthwise conv pyramid,
// upsampled), s3dg (single square FC).

#include <memory>
#include <optional>
#include <string>

#include "gcv/layers.hpp"

namespace gcv {

enum class CalibratorKind { ecal_g, ecal_s, ecal_t, ecal_l, se3d, ge3d_g, ge3d_c, s3dg };

inline std::string calibrator_name(CalibratorKind k) {
    switch (k) {
        case CalibratorKind::ecal_g: return "ecal_g";
        case CalibratorKind::ecal_s: return "ecal_s";
        case CalibratorKind::ecal_t: return "ecal_t";
        case CalibratorKind::ecal_l: return "ecal_l";
        case CalibratorKind::se3d: return "se3d";
        case CalibratorKind::ge3d_g: return "ge3d_g";
        case CalibratorKind::ge3d_c: return "ge3d_c";
        case CalibratorKind::s3dg: return "s3dg";
    }
    return "?";
}

inline std::optional<CalibratorKind> parse_calibrator(const std::string& s) {
    for (CalibratorKind k :
         {CalibratorKind::ecal_g, CalibratorKind::ecal_s, CalibratorKind::ecal_t,
          CalibratorKind::ecal_l, CalibratorKind::se3d, CalibratorKind::ge3d_g,
          CalibratorKind::ge3d_c, CalibratorKind::s3dg})
        if (calibrator_name(k) == s) return k;
    return std::nullopt;
}

struct CalibratorConfig {
    CalibratorKind kind{CalibratorKind::ecal_g};
    std::int64_t channels{0};
    bool batchnorm{false};        // BN after the context conv/FC (ECal-* only)
    std::int64_t se_reduction{16};
};

template <typename T>
class Calibrator {
  public:
    explicit Calibrator(const CalibratorConfig& cfg) : cfg_(cfg) {}
    virtual ~Calibrator() = default;

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.shape.c != cfg_.channels)
            throw DimensionError("calibrator " + calibrator_name(cfg_.kind) + " expects C=" +
                                 std::to_string(cfg_.channels) + ", got " + x.shape.str());
        Tensor<T> logits = gate_logits(x, training);
        logit_mean_ = mean_of(logits);
        gate_ = ops::sigmoid(logits);
        if (training) x_cache_ = x;
        return ops::gate_apply(x, gate_);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        Tensor<T> ggate;
        Tensor<T> gx = ops::gate_apply_backward(x_cache_, gate_, gy, ggate);
        Tensor<T> glogits = ops::sigmoid_backward(gate_, ggate);
        Tensor<T> gx_context = gate_logits_backward(glogits);
        nn::add_inplace(gx, gx_context);
        return gx;
    }

    virtual void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) = 0;
    virtual void visit_buffers(const std::string&, const nn::BufferVisitor<T>&) {}
    virtual void set_bn_mode(ops::BnMode) {}

    CalibratorKind kind() const { return cfg_.kind; }
    std::int64_t channels() const { return cfg_.channels; }

    /// Pre-broadcast gate (sigmoid output) from the last forward call.
    const Tensor<T>& last_gate() const { return gate_; }
    /// Mean pre-sigmoid logit from the last forward call.
    double last_logit_mean() const { return logit_mean_; }

  protected:
    /// Context pathway: produces the pre-sigmoid logit tensor.
    virtual Tensor<T> gate_logits(const Tensor<T>& x, bool training) = 0;
    /// Adjoint of the context pathway back to the calibrator input.
    virtual Tensor<T> gate_logits_backward(const Tensor<T>& glogits) = 0;

    static double mean_of(const Tensor<T>& t) {
        double acc = 0.0;
        for (T v : t.data) acc += static_cast<double>(v);
        return acc / static_cast<double>(t.data.size());
    }

    CalibratorConfig cfg_;

  private:
    Tensor<T> x_cache_;
    Tensor<T> gate_;
    double logit_mean_{0.0};
};

namespace detail {

template <typename T>
struct OptionalBn {
    std::optional<nn::BatchNorm<T>> bn;

    void make(std::int64_t c, bool enabled) {
        if (enabled) bn.emplace(c);
    }
    Tensor<T> forward(Tensor<T> x, bool training) {
        return bn ? bn->forward(x, training) : std::move(x);
    }
    Tensor<T> backward(Tensor<T> gy) { return bn ? bn->backward(gy) : std::move(gy); }
    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) {
        if (bn) bn->visit(prefix, v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) {
        if (bn) bn->visit_buffers(prefix, v);
    }
    void set_mode(ops::BnMode m) {
        if (bn) bn->p.mode = m;
    }
};

} // namespace detail

/// ECal-G: global average pool, square FC, optional BN.
template <typename T>
class EcalG final : public Calibrator<T> {
  public:
    EcalG(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg), fc_(cfg.channels, cfg.channels) {
        fc_.init_he(rng);
        bn_.make(cfg.channels, cfg.batchnorm);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        fc_.visit(prefix + ".fc", v);
        bn_.visit(prefix + ".bn", v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) override {
        bn_.visit_buffers(prefix + ".bn", v);
    }
    void set_bn_mode(ops::BnMode m) override { bn_.set_mode(m); }

    nn::Linear<T>& fc() { return fc_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        return bn_.forward(fc_.forward(ops::pool_global(x), training), training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_global_backward(fc_.backward(bn_.backward(glogits)), in_shape_);
    }

  private:
    nn::Linear<T> fc_;
    detail::OptionalBn<T> bn_;
    Shape in_shape_;
};

/// ECal-S: pool over time, 3x3 spatial conv, optional BN.
template <typename T>
class EcalS final : public Calibrator<T> {
  public:
    EcalS(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg),
          conv_(ops::make_same_conv<T>(cfg.channels, cfg.channels, 1, 3, 3)) {
        conv_.init_he(rng);
        bn_.make(cfg.channels, cfg.batchnorm);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        conv_.visit(prefix + ".conv", v);
        bn_.visit(prefix + ".bn", v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) override {
        bn_.visit_buffers(prefix + ".bn", v);
    }
    void set_bn_mode(ops::BnMode m) override { bn_.set_mode(m); }

    nn::Conv3d<T>& conv() { return conv_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        return bn_.forward(conv_.forward(ops::pool_over_time(x), training), training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_over_time_backward(conv_.backward(bn_.backward(glogits)), in_shape_);
    }

  private:
    nn::Conv3d<T> conv_;
    detail::OptionalBn<T> bn_;
    Shape in_shape_;
};

/// ECal-T: pool over space, 3x1x1 temporal conv, optional BN.
template <typename T>
class EcalT final : public Calibrator<T> {
  public:
    EcalT(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg),
          conv_(ops::make_same_conv<T>(cfg.channels, cfg.channels, 3, 1, 1)) {
        conv_.init_he(rng);
        bn_.make(cfg.channels, cfg.batchnorm);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        conv_.visit(prefix + ".conv", v);
        bn_.visit(prefix + ".bn", v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) override {
        bn_.visit_buffers(prefix + ".bn", v);
    }
    void set_bn_mode(ops::BnMode m) override { bn_.set_mode(m); }

    nn::Conv3d<T>& conv() { return conv_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        return bn_.forward(conv_.forward(ops::pool_over_space(x), training), training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_over_space_backward(conv_.backward(bn_.backward(glogits)), in_shape_);
    }

  private:
    nn::Conv3d<T> conv_;
    detail::OptionalBn<T> bn_;
    Shape in_shape_;
};

/// ECal-L: no pooling, 3x1x1 temporal conv on the full tensor, optional BN.
template <typename T>
class EcalL final : public Calibrator<T> {
  public:
    EcalL(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg),
          conv_(ops::make_same_conv<T>(cfg.channels, cfg.channels, 3, 1, 1)) {
        conv_.init_he(rng);
        bn_.make(cfg.channels, cfg.batchnorm);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        conv_.visit(prefix + ".conv", v);
        bn_.visit(prefix + ".bn", v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) override {
        bn_.visit_buffers(prefix + ".bn", v);
    }
    void set_bn_mode(ops::BnMode m) override { bn_.set_mode(m); }

    nn::Conv3d<T>& conv() { return conv_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        return bn_.forward(conv_.forward(x, training), training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return conv_.backward(bn_.backward(glogits));
    }

  private:
    nn::Conv3d<T> conv_;
    detail::OptionalBn<T> bn_;
};

/// SE3D: global pool, bottleneck FC pair with ReLU.
template <typename T>
class Se3d final : public Calibrator<T> {
  public:
    Se3d(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg),
          fc1_(cfg.channels, cfg.channels / cfg.se_reduction),
          fc2_(cfg.channels / cfg.se_reduction, cfg.channels) {
        if (cfg.channels % cfg.se_reduction)
            throw ConfigError("se3d: reduction must divide channel count");
        fc1_.init_he(rng);
        fc2_.init_he(rng);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        fc1_.visit(prefix + ".fc1", v);
        fc2_.visit(prefix + ".fc2", v);
    }

    nn::Linear<T>& fc1() { return fc1_; }
    nn::Linear<T>& fc2() { return fc2_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        return fc2_.forward(relu_.forward(fc1_.forward(ops::pool_global(x), training), training),
                            training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_global_backward(fc1_.backward(relu_.backward(fc2_.backward(glogits))),
                                         in_shape_);
    }

  private:
    nn::Linear<T> fc1_, fc2_;
    nn::Relu<T> relu_;
    Shape in_shape_;
};

/// GE3D-G: parameter-free, gate is the sigmoid of the pooled feature itself.
template <typename T>
class Ge3dG final : public Calibrator<T> {
  public:
    Ge3dG(const CalibratorConfig& cfg, Rng&) : Calibrator<T>(cfg) {}

    void visit(const std::string&, const nn::ParamVisitor<T>&) override {}

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool) override {
        in_shape_ = x.shape;
        return ops::pool_global(x);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_global_backward(glogits, in_shape_);
    }

  private:
    Shape in_shape_;
};

/// GE3D-C: pyramid of three spatially strided depthwise 3x3x3 convolutions
/// (each followed by BN, ReLU between), upsampled back to the input extents.
template <typename T>
class Ge3dC final : public Calibrator<T> {
  public:
    Ge3dC(const CalibratorConfig& cfg, Rng& rng) : Calibrator<T>(cfg) {
        for (int i = 0; i < 3; ++i) {
            convs_[i] = nn::Conv3d<T>(ops::make_same_conv<T>(
                cfg.channels, cfg.channels, 3, 3, 3, 1, 2, 2, cfg.channels, false));
            convs_[i].init_he(rng);
            bns_[i] = nn::BatchNorm<T>(cfg.channels);
        }
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        for (int i = 0; i < 3; ++i) {
            convs_[i].visit(prefix + ".conv" + std::to_string(i + 1), v);
            bns_[i].visit(prefix + ".bn" + std::to_string(i + 1), v);
        }
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) override {
        for (int i = 0; i < 3; ++i)
            bns_[i].visit_buffers(prefix + ".bn" + std::to_string(i + 1), v);
    }
    void set_bn_mode(ops::BnMode m) override {
        for (auto& bn : bns_) bn.p.mode = m;
    }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        Tensor<T> h = x;
        for (int i = 0; i < 3; ++i) {
            h = bns_[i].forward(convs_[i].forward(h, training), training);
            if (i < 2) h = relus_[i].forward(h, training);
        }
        coarse_shape_ = h.shape;
        return ops::upsample_nearest(h, in_shape_.h, in_shape_.w);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        Tensor<T> g = ops::upsample_nearest_backward(glogits, coarse_shape_);
        for (int i = 2; i >= 0; --i) {
            if (i < 2) g = relus_[i].backward(g);
            g = convs_[i].backward(bns_[i].backward(g));
        }
        return g;
    }

  private:
    std::array<nn::Conv3d<T>, 3> convs_;
    std::array<nn::BatchNorm<T>, 3> bns_;
    std::array<nn::Relu<T>, 2> relus_;
    Shape in_shape_, coarse_shape_;
};

/// S3D-G: global pool and a single square FC.
template <typename T>
class S3dG final : public Calibrator<T> {
  public:
    S3dG(const CalibratorConfig& cfg, Rng& rng)
        : Calibrator<T>(cfg), fc_(cfg.channels, cfg.channels) {
        fc_.init_he(rng);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) override {
        fc_.visit(prefix + ".fc", v);
    }

    nn::Linear<T>& fc() { return fc_; }

  protected:
    Tensor<T> gate_logits(const Tensor<T>& x, bool training) override {
        in_shape_ = x.shape;
        return fc_.forward(ops::pool_global(x), training);
    }
    Tensor<T> gate_logits_backward(const Tensor<T>& glogits) override {
        return ops::pool_global_backward(fc_.backward(glogits), in_shape_);
    }

  private:
    nn::Linear<T> fc_;
    Shape in_shape_;
};

template <typename T>
std::unique_ptr<Calibrator<T>> make_calibrator(const CalibratorConfig& cfg, Rng& rng) {
    if (cfg.channels < 1) throw ConfigError("calibrator: channel count must be >= 1");
    switch (cfg.kind) {
        case CalibratorKind::ecal_g: return std::make_unique<EcalG<T>>(cfg, rng);
        case CalibratorKind::ecal_s: return std::make_unique<EcalS<T>>(cfg, rng);
        case CalibratorKind::ecal_t: return std::make_unique<EcalT<T>>(cfg, rng);
        case CalibratorKind::ecal_l: return std::make_unique<EcalL<T>>(cfg, rng);
        case CalibratorKind::se3d: return std::make_unique<Se3d<T>>(cfg, rng);
        case CalibratorKind::ge3d_g: return std::make_unique<Ge3dG<T>>(cfg, rng);
        case CalibratorKind::ge3d_c: return std::make_unique<Ge3dC<T>>(cfg, rng);
        case CalibratorKind::s3dg: return std::make_unique<S3dG<T>>(cfg, rng);
    }
    throw ConfigError("calibrator: unknown kind");
}

} // namespace gcv
