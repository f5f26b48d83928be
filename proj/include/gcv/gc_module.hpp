#pragma once

// Group contextualization: channels are tiled into equal chunks of pC/4, a
// window of four calibrators covers four of those chunks, and remaining
// chunks pass through untouched. With loop placement the window rotates by
// one chunk per site, so over 4/p consecutive sites every chunk meets every
// calibrator exactly once.

#include <array>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "gcv/calibrators.hpp"

namespace gcv {

/// Exact rational partition ratio. p = 0 means "no calibration".
struct Ratio {
    std::int64_t num{0}, den{1};

    Ratio() = default;
    Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (d <= 0 || n < 0) throw ConfigError("ratio must be non-negative with positive denominator");
        const std::int64_t g = std::gcd(num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    bool zero() const { return num == 0; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Ratio&) const = default;

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

/// Accepts "N", "N/D" or a short decimal such as "0.5".
inline Ratio parse_ratio(const std::string& text) {
    if (text.empty()) throw ConfigError("empty ratio");
    auto slash = text.find('/');
    try {
        if (slash != std::string::npos)
            return Ratio(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
        auto dot = text.find('.');
        if (dot == std::string::npos) return Ratio(std::stoll(text), 1);
        const std::string frac = text.substr(dot + 1);
        if (frac.size() > 9) throw ConfigError("ratio has too many decimals: " + text);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const std::int64_t whole = dot == 0 ? 0 : std::stoll(text.substr(0, dot));
        return Ratio(whole * den + (frac.empty() ? 0 : std::stoll(frac)), den);
    } catch (const std::invalid_argument&) {
        throw ConfigError("cannot parse ratio: " + text);
    } catch (const std::out_of_range&) {
        throw ConfigError("ratio out of range: " + text);
    }
}

enum class Placement { standard, loop };

struct GcConfig {
    Ratio p{1, 1};
    Placement placement{Placement::standard};
    bool batchnorm{true};
    std::array<CalibratorKind, 4> order{CalibratorKind::ecal_g, CalibratorKind::ecal_s,
                                        CalibratorKind::ecal_t, CalibratorKind::ecal_l};
};

/// Channels handled by each of the four calibrators: pC/4.
inline std::int64_t gc_chunk_size(const Ratio& p, std::int64_t channels) {
    if (p.zero() || p.num > p.den) throw ConfigError("partition ratio must be in (0,1], got " + p.str());
    if ((p.num * channels) % (4 * p.den))
        throw ConfigError("p*C must be divisible by 4: p=" + p.str() + ", C=" +
                          std::to_string(channels));
    return (p.num * channels) / (4 * p.den);
}

/// Number of chunks tiling the channel axis; also the loop period 4/p.
inline std::int64_t gc_num_chunks(const Ratio& p, std::int64_t channels) {
    const std::int64_t chunk = gc_chunk_size(p, channels);
    if (channels % chunk)
        throw ConfigError("chunks of size " + std::to_string(chunk) + " do not tile C=" +
                          std::to_string(channels));
    return channels / chunk;
}

/// Chunk index for each of the four calibrators (in cfg.order). Standard
/// placement pins calibrator k to chunk k; loop placement rotates by one
/// chunk per site.
inline std::array<std::int64_t, 4> chunk_assignment(const GcConfig& cfg, std::int64_t channels,
                                                    std::int64_t block_index) {
    if (block_index < 0) throw ConfigError("block_index must be >= 0");
    const std::int64_t n_chunks = gc_num_chunks(cfg.p, channels);
    std::array<std::int64_t, 4> out{};
    for (std::int64_t k = 0; k < 4; ++k)
        out[k] = cfg.placement == Placement::loop ? (k + block_index) % n_chunks : k;
    return out;
}

/// A calibration site: equal channel chunks, some of which are calibrated.
/// Covers the full GC module (four calibrators), single-calibrator ablations
/// and the full-width comparison calibrators.
template <typename T>
class GcModule {
  public:
    /// Full GC module at GC site `block_index`.
    GcModule(const GcConfig& cfg, std::int64_t channels, std::int64_t block_index, Rng& rng)
        : channels_(channels) {
        chunk_size_ = gc_chunk_size(cfg.p, channels);
        n_chunks_ = gc_num_chunks(cfg.p, channels);
        const auto assignment = chunk_assignment(cfg, channels, block_index);
        chunk_of_.assign(n_chunks_, -1);
        for (int k = 0; k < 4; ++k) {
            if (chunk_of_[assignment[k]] != -1)
                throw ConfigError("chunk assignment collision at chunk " +
                                  std::to_string(assignment[k]));
            chunk_of_[assignment[k]] = k;
            CalibratorConfig cc;
            cc.kind = cfg.order[k];
            cc.channels = chunk_size_;
            cc.batchnorm = cfg.batchnorm;
            slots_.push_back(Slot{make_calibrator<T>(cc, rng), assignment[k]});
        }
    }

    /// Single calibrator on chunk 0 (channels pC/4), the ablation layout.
    GcModule(CalibratorKind kind, const Ratio& p, bool batchnorm, std::int64_t channels,
             Rng& rng)
        : channels_(channels) {
        chunk_size_ = gc_chunk_size(p, channels);
        n_chunks_ = gc_num_chunks(p, channels);
        chunk_of_.assign(n_chunks_, -1);
        chunk_of_[0] = 0;
        CalibratorConfig cc;
        cc.kind = kind;
        cc.channels = chunk_size_;
        cc.batchnorm = batchnorm;
        slots_.push_back(Slot{make_calibrator<T>(cc, rng), 0});
    }

    /// Full-width comparison calibrator (se3d / ge3d_g / ge3d_c / s3dg).
    GcModule(CalibratorKind kind, std::int64_t channels, Rng& rng) : channels_(channels) {
        chunk_size_ = channels;
        n_chunks_ = 1;
        chunk_of_.assign(1, 0);
        CalibratorConfig cc;
        cc.kind = kind;
        cc.channels = channels;
        slots_.push_back(Slot{make_calibrator<T>(cc, rng), 0});
    }

    Tensor<T> forward(const Tensor<T>& x, bool training) {
        if (x.shape.c != channels_)
            throw DimensionError("gc module expects C=" + std::to_string(channels_) + ", got " +
                                 x.shape.str());
        if (n_chunks_ == 1) return slots_[0].cal->forward(x, training);
        auto parts = ops::split_channels(x, chunk_sizes());
        for (auto& slot : slots_)
            parts[slot.chunk] = slot.cal->forward(parts[slot.chunk], training);
        return ops::concat_channels(parts);
    }

    Tensor<T> backward(const Tensor<T>& gy) {
        if (n_chunks_ == 1) return slots_[0].cal->backward(gy);
        auto parts = ops::split_channels(gy, chunk_sizes());
        for (auto& slot : slots_)
            parts[slot.chunk] = slot.cal->backward(parts[slot.chunk]);
        return ops::concat_channels(parts);
    }

    void visit(const std::string& prefix, const nn::ParamVisitor<T>& v) {
        for (auto& slot : slots_) slot.cal->visit(prefix + "." + calibrator_name(slot.cal->kind()), v);
    }
    void visit_buffers(const std::string& prefix, const nn::BufferVisitor<T>& v) {
        for (auto& slot : slots_)
            slot.cal->visit_buffers(prefix + "." + calibrator_name(slot.cal->kind()), v);
    }
    void set_bn_mode(ops::BnMode m) {
        for (auto& slot : slots_) slot.cal->set_bn_mode(m);
    }

    std::int64_t chunk_size() const { return chunk_size_; }
    std::int64_t num_chunks() const { return n_chunks_; }

    struct Slot {
        std::unique_ptr<Calibrator<T>> cal;
        std::int64_t chunk;
    };
    const std::vector<Slot>& slots() const { return slots_; }

  private:
    std::vector<std::int64_t> chunk_sizes() const {
        return std::vector<std::int64_t>(n_chunks_, chunk_size_);
    }

    std::int64_t channels_{0}, chunk_size_{0}, n_chunks_{0};
    std::vector<int> chunk_of_;
    std::vector<Slot> slots_;
};

} // namespace gcv
