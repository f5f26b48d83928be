#include "gcv/toybench.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace gcv::toy {

namespace {

void paint_rect(Tensor<float>& frames, std::int64_t t, std::int64_t y0, std::int64_t x0,
                std::int64_t side, float value) {
    const Shape s = frames.shape;
    for (std::int64_t y = y0; y < y0 + side; ++y)
        for (std::int64_t x = x0; x < x0 + side; ++x)
            if (y >= 0 && y < s.h && x >= 0 && x < s.w) frames.at(0, t, y, x, 0) = value;
}

} // namespace

std::vector<SyntheticClip> generate_dataset(int k, int n_per_class, std::int64_t frames,
                                            std::int64_t height, std::int64_t width,
                                            float noise_sigma, std::uint64_t seed) {
    if (k != kClasses) throw ConfigError("the axial dataset defines exactly 8 classes");
    if (height < 16 || width < 16 || frames < 2)
        throw ConfigError("dataset needs at least 16x16 frames and 2 time steps");
    std::vector<SyntheticClip> clips;
    clips.reserve(static_cast<std::size_t>(k) * n_per_class);
    const float bg = 0.1f;

    for (int label = 0; label < k; ++label) {
        for (int i = 0; i < n_per_class; ++i) {
            const std::uint64_t clip_seed =
                derive_seed(seed, static_cast<std::uint64_t>(label) * 1000003u + i);
            Rng rng(clip_seed);
            // Paired classes share their geometry stream so that the two
            // orders of one pair have identical frame multisets.
            Rng geom(derive_seed(seed, 500009u * (label / 2) + i));

            SyntheticClip clip;
            clip.label = label;
            clip.seed = clip_seed;
            clip.frames = Tensor<float>::full(Shape{1, frames, height, width, 1}, bg);
            Tensor<float>& f = clip.frames;

            switch (label / 2) {
                case 0: { // global brightness ramp
                    for (std::int64_t t = 0; t < frames; ++t) {
                        const std::int64_t tt = label == 0 ? t : frames - 1 - t;
                        const float b =
                            0.15f + 0.7f * static_cast<float>(tt) / static_cast<float>(frames - 1);
                        for (std::int64_t y = 0; y < height; ++y)
                            for (std::int64_t x = 0; x < width; ++x) f.at(0, t, y, x, 0) = b;
                    }
                    break;
                }
                case 1: { // static square in one quadrant
                    const std::int64_t side = height * 5 / 16; // 10 at 32
                    const std::int64_t span = height / 2 - side;
                    const std::int64_t jy = geom.below(span + 1);
                    const std::int64_t jx = geom.below(span + 1);
                    const std::int64_t y0 = label == 2 ? jy : height / 2 + jy;
                    const std::int64_t x0 = label == 2 ? jx : width / 2 + jx;
                    for (std::int64_t t = 0; t < frames; ++t)
                        paint_rect(f, t, y0, x0, side, 0.9f);
                    break;
                }
                case 2: { // two-phase flash, A then B vs B then A
                    const std::int64_t side = height / 4; // 8 at 32
                    const std::int64_t ya = height / 2 - side / 2;
                    const std::int64_t xa = width / 8;
                    const std::int64_t xb = width - width / 8 - side;
                    for (std::int64_t t = 0; t < frames; ++t) {
                        const bool first_half = t < frames / 2;
                        const bool at_a = (label == 4) == first_half;
                        paint_rect(f, t, ya, at_a ? xa : xb, side, 0.9f);
                    }
                    break;
                }
                default: { // drifting dot, matched trajectories
                    const std::int64_t side = height / 8; // 4 at 32
                    const std::int64_t step = 2;
                    const std::int64_t travel = step * (frames - 1);
                    const std::int64_t y0 = geom.below(height - side + 1);
                    const std::int64_t x_left_start =
                        travel + geom.below(std::max<std::int64_t>(width - side - travel + 1, 1));
                    for (std::int64_t t = 0; t < frames; ++t) {
                        const std::int64_t x = label == 6 ? x_left_start - step * t
                                                          : x_left_start - travel + step * t;
                        paint_rect(f, t, y0, x, side, 0.95f);
                    }
                    break;
                }
            }

            if (noise_sigma > 0.0f)
                for (auto& v : f.data) v += static_cast<float>(rng.normal(0.0, noise_sigma));
            clips.push_back(std::move(clip));
        }
    }
    return clips;
}

void save_dataset(const std::string& path, const std::vector<SyntheticClip>& clips) {
    WeightContainer c;
    std::vector<float> labels;
    std::vector<float> seeds;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        const Shape s = clips[i].frames.shape;
        char name[32];
        std::snprintf(name, sizeof name, "clip.%05zu", i);
        c.add(name, {s.n, s.t, s.h, s.w, s.c}, clips[i].frames.data);
        labels.push_back(static_cast<float>(clips[i].label));
        seeds.push_back(static_cast<float>(clips[i].seed % (1u << 24)));
    }
    c.add("labels", {static_cast<std::int64_t>(labels.size())}, labels);
    c.add("seeds", {static_cast<std::int64_t>(seeds.size())}, seeds);
    c.save(path);
}

std::vector<SyntheticClip> load_dataset(const std::string& path) {
    WeightContainer c = WeightContainer::load(path);
    const WeightEntry* labels = c.find("labels");
    if (!labels) throw IoError("dataset cache lacks a labels entry: " + path);
    std::vector<SyntheticClip> clips;
    for (std::size_t i = 0; i < labels->element_count(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "clip.%05zu", i);
        const WeightEntry* e = c.find(name);
        if (!e || e->extents.size() != 5) throw IoError("dataset cache missing " + std::string(name));
        SyntheticClip clip;
        clip.label = static_cast<int>(labels->data_f32[i]);
        Shape s{static_cast<std::int64_t>(e->extents[0]), static_cast<std::int64_t>(e->extents[1]),
                static_cast<std::int64_t>(e->extents[2]), static_cast<std::int64_t>(e->extents[3]),
                static_cast<std::int64_t>(e->extents[4])};
        clip.frames = Tensor<float>(s, e->data_f32);
        clips.push_back(std::move(clip));
    }
    return clips;
}

NetworkSpec micro_spec(const std::string& calibrator, const Ratio& p, std::int64_t frames,
                       std::int64_t resolution) {
    return NetworkSpec::make("tsn", "micro", calibrator, p, Placement::standard, "111",
                             frames, resolution, kClasses, 1);
}

namespace {

struct ParamRef {
    std::vector<float>* value;
    std::vector<float>* grad;
};

Tensor<float> assemble_batch(const std::vector<SyntheticClip>& clips,
                             const std::vector<std::int64_t>& idx, std::size_t begin,
                             std::size_t count, std::vector<int>& labels) {
    const Shape one = clips[idx[begin]].frames.shape;
    Tensor<float> batch(Shape{static_cast<std::int64_t>(count), one.t, one.h, one.w, one.c});
    labels.resize(count);
    const std::int64_t stride = one.numel();
    for (std::size_t b = 0; b < count; ++b) {
        const auto& clip = clips[idx[begin + b]];
        std::copy(clip.frames.data.begin(), clip.frames.data.end(),
                  batch.data.begin() + static_cast<std::int64_t>(b) * stride);
        labels[b] = clip.label;
    }
    return batch;
}

} // namespace

std::string TrainLog::to_csv() const {
    std::ostringstream out;
    out << "step,loss,acc\n";
    for (const auto& row : rows) out << row.step << "," << row.loss << "," << row.accuracy << "\n";
    return out.str();
}

TrainLog train(Network<float>& net, const std::vector<SyntheticClip>& train_set,
               const std::vector<SyntheticClip>& val_set, const TrainConfig& cfg) {
    if (cfg.steps < 0 || cfg.batch_size < 1) throw ConfigError("bad train config");
    TrainLog log;
    if (cfg.steps == 0) return log;
    if (train_set.empty()) throw ConfigError("empty training set");

    std::vector<ParamRef> params;
    net.visit([&](const std::string&, const auto&, std::vector<float>& value,
                  std::vector<float>& grad) { params.push_back({&value, &grad}); });
    std::vector<std::vector<float>> velocity;
    velocity.reserve(params.size());
    for (auto& p : params) velocity.emplace_back(p.value->size(), 0.0f);

    Rng order_rng(derive_seed(cfg.seed, 0xba7c4));
    std::vector<std::int64_t> idx(train_set.size());
    std::iota(idx.begin(), idx.end(), 0);
    order_rng.shuffle(idx);
    std::size_t cursor = 0;

    double loss_acc = 0.0;
    int loss_count = 0;
    std::vector<int> labels;
    for (int step = 1; step <= cfg.steps; ++step) {
        if (cursor + cfg.batch_size > idx.size()) {
            order_rng.shuffle(idx);
            cursor = 0;
        }
        auto x = assemble_batch(train_set, idx, cursor, cfg.batch_size, labels);
        cursor += cfg.batch_size;

        net.set_bn_mode(ops::BnMode::train);
        auto logits = net.forward_classify(x, true);
        std::vector<float> grad;
        const float loss = ops::softmax_cross_entropy(logits.data, x.shape.n, net.spec.classes,
                                                      labels, &grad);
        if (!std::isfinite(loss))
            throw std::runtime_error("training diverged: loss is not finite at step " +
                                     std::to_string(step));
        loss_acc += loss;
        ++loss_count;

        net.zero_grad();
        net.backward(Tensor<float>(logits.shape, grad));

        float lr = cfg.lr;
        if (step > cfg.steps / 2) lr *= 0.1f;
        if (step > cfg.steps * 3 / 4) lr *= 0.1f;
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& value = *params[i].value;
            auto& gradv = *params[i].grad;
            auto& vel = velocity[i];
            for (std::size_t j = 0; j < value.size(); ++j) {
                vel[j] = cfg.momentum * vel[j] - lr * (gradv[j] + cfg.weight_decay * value[j]);
                value[j] += vel[j];
            }
        }

        const bool last = step == cfg.steps;
        if ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || last) {
            double acc;
            if (!val_set.empty())
                acc = evaluate(net, val_set).accuracy;
            else
                acc = evaluate(net, train_set).accuracy;
            net.set_bn_mode(ops::BnMode::train);
            log.rows.push_back({step, loss_acc / std::max(loss_count, 1), acc});
            log.final_accuracy = acc;
            loss_acc = 0.0;
            loss_count = 0;
        }
    }
    net.set_bn_mode(ops::BnMode::eval);
    return log;
}

EvalResult evaluate(Network<float>& net, const std::vector<SyntheticClip>& clips) {
    EvalResult result;
    if (clips.empty()) return result;
    net.set_bn_mode(ops::BnMode::eval);
    const std::size_t batch = 16;
    std::vector<std::int64_t> idx(clips.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> labels;
    std::int64_t correct = 0;
    std::array<std::int64_t, kClasses> class_correct{};
    for (std::size_t begin = 0; begin < clips.size(); begin += batch) {
        const std::size_t count = std::min(batch, clips.size() - begin);
        auto x = assemble_batch(clips, idx, begin, count, labels);
        auto logits = net.forward_classify(x, false);
        for (std::size_t b = 0; b < count; ++b) {
            const float* row = logits.data.data() + b * net.spec.classes;
            int best = 0;
            for (int c = 1; c < net.spec.classes; ++c)
                if (row[c] > row[best]) best = c;
            result.per_class_count[labels[b]]++;
            if (best == labels[b]) {
                ++correct;
                class_correct[labels[b]]++;
            }
        }
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(clips.size());
    for (int k = 0; k < kClasses; ++k)
        result.per_class[k] = result.per_class_count[k]
                                  ? static_cast<double>(class_correct[k]) /
                                        static_cast<double>(result.per_class_count[k])
                                  : 0.0;
    return result;
}

GateStats gate_stats(Network<float>& net, const std::vector<SyntheticClip>& clips) {
    GateStats stats;
    net.set_bn_mode(ops::BnMode::eval);
    auto sites = net.sites();
    if (sites.empty()) return stats;

    // mean over clips of the per-clip mean logit, split by class
    struct Acc {
        double sum{0.0};
        std::int64_t count{0};
    };
    std::vector<std::vector<std::array<Acc, kClasses>>> acc(sites.size());
    for (std::size_t s = 0; s < sites.size(); ++s) acc[s].resize(sites[s]->slots().size());

    std::vector<int> labels;
    for (int label = 0; label < kClasses; ++label) {
        std::vector<std::int64_t> idx;
        for (std::size_t i = 0; i < clips.size(); ++i)
            if (clips[i].label == label) idx.push_back(static_cast<std::int64_t>(i));
        const std::size_t batch = 16;
        for (std::size_t begin = 0; begin < idx.size(); begin += batch) {
            const std::size_t count = std::min(batch, idx.size() - begin);
            auto x = assemble_batch(clips, idx, begin, count, labels);
            net.forward_classify(x, false);
            for (std::size_t s = 0; s < sites.size(); ++s)
                for (std::size_t k = 0; k < sites[s]->slots().size(); ++k) {
                    acc[s][k][label].sum +=
                        sites[s]->slots()[k].cal->last_logit_mean() * static_cast<double>(count);
                    acc[s][k][label].count += static_cast<std::int64_t>(count);
                }
        }
    }

    for (std::size_t s = 0; s < sites.size(); ++s)
        for (std::size_t k = 0; k < sites[s]->slots().size(); ++k)
            for (int label = 0; label < kClasses; ++label) {
                const auto& a = acc[s][k][label];
                if (a.count == 0) continue;
                stats.rows.push_back({static_cast<int>(s),
                                      calibrator_name(sites[s]->slots()[k].cal->kind()), label,
                                      a.sum / static_cast<double>(a.count)});
            }
    return stats;
}

std::string GateStats::to_csv() const {
    std::ostringstream out;
    out << "site,calibrator,class,mean_logit\n";
    for (const auto& row : rows)
        out << row.site << "," << row.calibrator << "," << row.label << "," << row.mean_logit
            << "\n";
    return out.str();
}

} // namespace gcv::toy
