// gcnet: complexity accounting, numerical verification and toy-scale training
// for group-contextualized video backbones.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/config/file error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gcv/accounting.hpp"
#include "gcv/gradcheck.hpp"
#include "gcv/selftest.hpp"
#include "gcv/toybench.hpp"
#include "gcv/weights_io.hpp"

namespace fs = std::filesystem;
using namespace gcv;

namespace {

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

struct SummaryOpts {
    std::string arch{"tsn"};
    std::string p{"1"};
    std::string placement{"standard"};
    std::string mask{"1111"};
    std::string calibrator{"gc"};
    std::int64_t frames{8};
    std::int64_t res{224};
    std::int64_t classes{174};
    std::string csv;
    bool totals_only{false};
};

int cmd_summary(const SummaryOpts& o) {
    auto spec = NetworkSpec::make(o.arch, "50", o.calibrator, parse_ratio(o.p),
                                  o.placement == "loop" ? Placement::loop : Placement::standard,
                                  o.mask, o.frames, o.res, o.classes);
    std::cout << "resolved config:\n" << spec.render() << "\n";
    auto report = model_count(spec);
    std::cout << report.render(!o.totals_only);
    if (spec.calibrator == SiteChoice::gc) {
        std::cout << "\n" << render_percentage_table(spec.p);
    }
    if (!o.csv.empty()) {
        write_file(o.csv, report.to_csv());
        std::cout << "wrote " << o.csv << "\n";
    }
    return 0;
}

struct GradcheckOpts {
    std::uint64_t seed{1};
    int trials{20};
    bool inject_fault{false};
};

int cmd_gradcheck(const GradcheckOpts& o) {
    std::cout << "resolved config: seed=" << o.seed << " trials=" << o.trials
              << " step=1e-5 tol=1e-5 floor=1e-8"
              << (o.inject_fault ? " inject-fault=on" : "") << "\n";
    GradCheckOptions opt;
    opt.seed = o.seed;
    opt.trials = o.trials;
    opt.inject_fault = o.inject_fault;
    auto report = run_gradient_checks(opt);
    for (const auto& c : report.cases)
        std::printf("  %-28s max rel err %10.3e  %s\n", c.name.c_str(), c.max_rel_err,
                    c.pass ? "pass" : "FAIL");
    std::printf("%s: %zu cases\n", report.all_pass ? "PASS" : "FAIL", report.cases.size());
    return report.all_pass ? 0 : 1;
}

int cmd_selftest(std::uint64_t seed) {
    std::cout << "resolved config: seed=" << seed << "\n";
    auto result = run_selftest(seed);
    for (const auto& [name, ok] : result.checks)
        std::printf("  %-42s %s\n", name.c_str(), ok ? "pass" : "FAIL");
    std::printf("%s %d/%zu\n", result.all_pass() ? "PASS" : "FAIL", result.passed,
                result.checks.size());
    return result.all_pass() ? 0 : 1;
}

struct TrainOpts {
    int steps{800};
    std::uint64_t seed{1};
    std::string gc{"on"};
    std::string calibrator{"gc"};
    std::string p{"1"};
    std::string out{"toy_out"};
    double lr{0.08};
    int batch{8};
    double noise{0.05};
    int train_per_class{400};
    int val_per_class{100};
    std::string dataset_cache;
};

std::vector<toy::SyntheticClip> toy_dataset(int per_class, double noise, std::uint64_t seed,
                                            const std::string& cache) {
    if (!cache.empty() && fs::exists(cache)) {
        std::cout << "loading dataset cache " << cache << "\n";
        return toy::load_dataset(cache);
    }
    auto clips = toy::generate_dataset(toy::kClasses, per_class, 8, 32, 32,
                                       static_cast<float>(noise), seed);
    if (!cache.empty()) {
        toy::save_dataset(cache, clips);
        std::cout << "wrote dataset cache " << cache << "\n";
    }
    return clips;
}

int cmd_train_toy(const TrainOpts& o) {
    const std::string calibrator = o.gc == "off" ? "none" : o.calibrator;
    auto spec = toy::micro_spec(calibrator, parse_ratio(o.gc == "off" ? "0" : o.p));
    std::cout << "resolved config:\n"
              << spec.render() << "steps=" << o.steps << "\nseed=" << o.seed << "\nlr=" << o.lr
              << "\nbatch=" << o.batch << "\nnoise=" << o.noise << "\ntrain_per_class="
              << o.train_per_class << "\nval_per_class=" << o.val_per_class << "\n\n";

    auto net = build_network<float>(spec, o.seed);
    auto train_set =
        toy_dataset(o.train_per_class, o.noise, derive_seed(o.seed, 101), o.dataset_cache);
    auto val_set = toy_dataset(o.val_per_class, o.noise, derive_seed(o.seed, 202), "");

    toy::TrainConfig cfg;
    cfg.steps = o.steps;
    cfg.batch_size = o.batch;
    cfg.lr = static_cast<float>(o.lr);
    cfg.seed = o.seed;
    auto log = toy::train(net, train_set, val_set, cfg);
    for (const auto& row : log.rows)
        std::printf("  step %5d  loss %.4f  val acc %.4f\n", row.step, row.loss, row.accuracy);

    fs::create_directories(o.out);
    const std::string weights = (fs::path(o.out) / "model.gcw").string();
    pack_model(net).save(weights);
    write_file((fs::path(o.out) / "model.cfg").string(), spec.render());
    write_file((fs::path(o.out) / "log.csv").string(), log.to_csv());
    std::cout << "wrote " << weights << "\n";
    return 0;
}

struct EvalOpts {
    std::string weights;
    std::string config;
    std::uint64_t seed{1};
    int val_per_class{100};
    double noise{0.05};
    std::string out_csv; // gates only
};

Network<float> load_toy_model(const EvalOpts& o) {
    std::string config = o.config;
    if (config.empty()) {
        fs::path p(o.weights);
        p.replace_extension(".cfg");
        config = p.string();
    }
    auto spec = NetworkSpec::parse(read_file(config));
    std::cout << "resolved config:\n" << spec.render() << "\n";
    auto net = build_network<float>(spec, 0);
    unpack_model(net, WeightContainer::load(o.weights));
    return net;
}

int cmd_eval(const EvalOpts& o) {
    auto net = load_toy_model(o);
    auto val_set = toy_dataset(o.val_per_class, o.noise, derive_seed(o.seed, 202), "");
    auto result = toy::evaluate(net, val_set);
    std::printf("accuracy %.4f over %zu clips\n", result.accuracy, val_set.size());
    for (int k = 0; k < toy::kClasses; ++k)
        std::printf("  class %d: %.4f (%lld clips)\n", k, result.per_class[k],
                    static_cast<long long>(result.per_class_count[k]));
    return 0;
}

int cmd_gates(const EvalOpts& o) {
    auto net = load_toy_model(o);
    auto val_set = toy_dataset(o.val_per_class, o.noise, derive_seed(o.seed, 202), "");
    auto stats = toy::gate_stats(net, val_set);
    write_file(o.out_csv, stats.to_csv());
    std::cout << "wrote " << stats.rows.size() << " rows to " << o.out_csv << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"group-contextualized video backbones: accounting, verification, toy training"};
    app.require_subcommand(1);

    SummaryOpts so;
    auto* summary = app.add_subcommand("summary", "analytic parameter/MAC report");
    summary->add_option("--arch", so.arch, "backbone style")
        ->check(CLI::IsMember({"tsn", "tsm", "gst"}));
    summary->add_option("--p", so.p, "partition ratio (0 disables calibration)");
    summary->add_option("--placement", so.placement, "chunk placement")
        ->check(CLI::IsMember({"standard", "loop"}));
    summary->add_option("--mask", so.mask, "per-stage insertion mask, e.g. 1111");
    summary->add_option("--calibrator", so.calibrator,
                        "gc | ecal_g/s/t/l | se3d | ge3d_g | ge3d_c | s3dg");
    summary->add_option("--frames", so.frames, "frames per clip");
    summary->add_option("--res", so.res, "input resolution");
    summary->add_option("--classes", so.classes, "classifier classes");
    summary->add_option("--csv", so.csv, "write per-layer counts to CSV");
    summary->add_flag("--totals-only", so.totals_only, "suppress the per-layer rows");

    GradcheckOpts go;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck->add_option("--seed", go.seed, "rng seed");
    gradcheck->add_option("--trials", go.trials, "random shapes per case");
    gradcheck->add_flag("--inject-fault", go.inject_fault,
                        "corrupt one backward pass to prove the check bites");

    std::uint64_t selftest_seed = 1;
    auto* selftest = app.add_subcommand("selftest", "run the built-in invariant suite");
    selftest->add_option("--seed", selftest_seed, "rng seed");

    TrainOpts to;
    auto* train_toy = app.add_subcommand("train-toy", "train the micro network on axial clips");
    train_toy->add_option("--steps", to.steps, "sgd steps");
    train_toy->add_option("--seed", to.seed, "seed for data, init and batch order");
    train_toy->add_option("--gc", to.gc, "on|off")->check(CLI::IsMember({"on", "off"}));
    train_toy->add_option("--calibrator", to.calibrator, "gc or a single calibrator kind");
    train_toy->add_option("--p", to.p, "partition ratio");
    train_toy->add_option("--out", to.out, "output directory");
    train_toy->add_option("--lr", to.lr, "learning rate");
    train_toy->add_option("--batch", to.batch, "batch size");
    train_toy->add_option("--noise", to.noise, "dataset noise sigma");
    train_toy->add_option("--train-per-class", to.train_per_class, "training clips per class");
    train_toy->add_option("--val-per-class", to.val_per_class, "validation clips per class");
    train_toy->add_option("--dataset-cache", to.dataset_cache,
                          "load/store the training set in container format");

    EvalOpts eo;
    auto* eval = app.add_subcommand("eval", "evaluate saved toy weights");
    eval->add_option("--weights", eo.weights, "model.gcw path")->required();
    eval->add_option("--config", eo.config, "model.cfg path (default: next to weights)");
    eval->add_option("--seed", eo.seed, "validation dataset seed");
    eval->add_option("--val-per-class", eo.val_per_class, "validation clips per class");
    eval->add_option("--noise", eo.noise, "dataset noise sigma");

    EvalOpts ga;
    auto* gates = app.add_subcommand("gates", "per-class mean gate logits as CSV");
    gates->add_option("--weights", ga.weights, "model.gcw path")->required();
    gates->add_option("--config", ga.config, "model.cfg path (default: next to weights)");
    gates->add_option("--out", ga.out_csv, "output CSV path")->required();
    gates->add_option("--seed", ga.seed, "dataset seed");
    gates->add_option("--val-per-class", ga.val_per_class, "clips per class");
    gates->add_option("--noise", ga.noise, "dataset noise sigma");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (summary->parsed()) return cmd_summary(so);
        if (gradcheck->parsed()) return cmd_gradcheck(go);
        if (selftest->parsed()) return cmd_selftest(selftest_seed);
        if (train_toy->parsed()) return cmd_train_toy(to);
        if (eval->parsed()) return cmd_eval(eo);
        if (gates->parsed()) return cmd_gates(ga);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
