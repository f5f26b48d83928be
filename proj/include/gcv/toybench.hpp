#pragma once

// Desk-scale benchmark on synthetic clips whose eight classes are four
// axis-signature pairs:
//
//   0/1  global   whole-frame brightness ramp, up vs down
//   2/3  spatial  static bright square, upper-left vs lower-right quadrant
//   4/5  temporal flash at site A then B vs B then A; the two classes have
//                 identical frame multisets, so any model that pools over
//                 time first cannot separate them
//   6/7  local    small dot drifting left vs right from a shared random
//                 start, again with matched frame multisets per pair
//
// Pixel patterns live in [0,1]; Gaussian noise is added on top.

#include <cstdint>
#include <string>
#include <vector>

#include "gcv/backbone.hpp"
#include "gcv/weights_io.hpp"

namespace gcv::toy {

inline constexpr int kClasses = 8;

struct SyntheticClip {
    Tensor<float> frames; // [1,T,H,W,1]
    int label{0};
    std::uint64_t seed{0};
};

/// K must be 8. Deterministic per (seed, clip index).
std::vector<SyntheticClip> generate_dataset(int k, int n_per_class, std::int64_t frames,
                                            std::int64_t height, std::int64_t width,
                                            float noise_sigma, std::uint64_t seed);

void save_dataset(const std::string& path, const std::vector<SyntheticClip>& clips);
std::vector<SyntheticClip> load_dataset(const std::string& path);

/// The micro backbone used throughout: three bottleneck blocks of widths
/// 16/32/64 with stride 2 between, 32x32 single-channel input, 8 frames.
NetworkSpec micro_spec(const std::string& calibrator, const Ratio& p,
                       std::int64_t frames = 8, std::int64_t resolution = 32);

struct TrainConfig {
    int steps{800};
    int batch_size{8};
    float lr{0.08f};
    float momentum{0.9f};
    float weight_decay{1e-4f};
    std::uint64_t seed{1};
    int eval_every{200};
};

struct TrainLogRow {
    int step;        // 1-based step index at the time of logging
    double loss;     // mean training loss since the previous row
    double accuracy; // validation accuracy (or training accuracy if no val set)
};

struct TrainLog {
    std::vector<TrainLogRow> rows;
    double final_accuracy{0.0};
    std::string to_csv() const; // step,loss,acc
};

/// SGD with momentum and weight decay; the learning rate decays by 10x at 50%
/// and 75% of the step budget. Throws on NaN loss.
TrainLog train(Network<float>& net, const std::vector<SyntheticClip>& train_set,
               const std::vector<SyntheticClip>& val_set, const TrainConfig& cfg);

struct EvalResult {
    double accuracy{0.0};
    std::array<double, kClasses> per_class{};
    std::array<std::int64_t, kClasses> per_class_count{};
};

EvalResult evaluate(Network<float>& net, const std::vector<SyntheticClip>& clips);

struct GateStatRow {
    int site;
    std::string calibrator;
    int label;
    double mean_logit; // mean pre-sigmoid gate logit over the class's clips
};

struct GateStats {
    std::vector<GateStatRow> rows;
    std::string to_csv() const; // site,calibrator,class,mean_logit
};

GateStats gate_stats(Network<float>& net, const std::vector<SyntheticClip>& clips);

} // namespace gcv::toy
