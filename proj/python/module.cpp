// Python bindings for the core operations: tensor kernels on numpy arrays,
// the GC module, complexity accounting and the toy benchmark.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gcv/accounting.hpp"
#include "gcv/gc_module.hpp"
#include "gcv/gradcheck.hpp"
#include "gcv/selftest.hpp"
#include "gcv/toybench.hpp"

namespace py = pybind11;
using namespace gcv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor<double> to_tensor(const Array& a) {
    if (a.ndim() != 5) throw DimensionError("expected a rank-5 array [N,T,H,W,C]");
    Shape s{a.shape(0), a.shape(1), a.shape(2), a.shape(3), a.shape(4)};
    Tensor<double> t(s);
    std::copy(a.data(), a.data() + t.numel(), t.data.begin());
    return t;
}

Array from_tensor(const Tensor<double>& t) {
    Array out({t.shape.n, t.shape.t, t.shape.h, t.shape.w, t.shape.c});
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

Ratio ratio_from(const std::string& text) { return parse_ratio(text); }

class PyGcModule {
  public:
    PyGcModule(std::int64_t channels, const std::string& p, const std::string& placement,
               bool batchnorm, std::int64_t block_index, std::uint64_t seed)
        : channels_(channels) {
        GcConfig cfg;
        cfg.p = parse_ratio(p);
        cfg.placement = placement == "loop" ? Placement::loop : Placement::standard;
        cfg.batchnorm = batchnorm;
        Rng rng(seed);
        module_ = std::make_unique<GcModule<double>>(cfg, channels, block_index, rng);
        module_->set_bn_mode(ops::BnMode::eval);
    }

    Array forward(const Array& x) { return from_tensor(module_->forward(to_tensor(x), false)); }

    std::vector<std::pair<std::string, std::int64_t>> assignment() const {
        std::vector<std::pair<std::string, std::int64_t>> out;
        for (const auto& slot : module_->slots())
            out.emplace_back(calibrator_name(slot.cal->kind()), slot.chunk);
        return out;
    }

    std::int64_t chunk_size() const { return module_->chunk_size(); }
    std::int64_t num_chunks() const { return module_->num_chunks(); }

  private:
    std::int64_t channels_;
    std::unique_ptr<GcModule<double>> module_;
};

py::dict count_model(const std::string& style, const std::string& calibrator,
                     const std::string& p, const std::string& placement,
                     const std::string& mask, std::int64_t frames, std::int64_t resolution,
                     std::int64_t classes) {
    auto spec = NetworkSpec::make(style, "50", calibrator, parse_ratio(p),
                                  placement == "loop" ? Placement::loop : Placement::standard,
                                  mask, frames, resolution, classes);
    auto report = model_count(spec);
    py::dict out;
    out["params"] = report.total_params;
    out["macs"] = report.total_macs;
    if (report.has_baseline) {
        out["baseline_params"] = report.baseline_params;
        out["baseline_macs"] = report.baseline_macs;
        out["overhead_params_pct"] = report.overhead_params_pct();
        out["overhead_macs_pct"] = report.overhead_macs_pct();
    }
    py::list layers;
    for (const auto& row : report.rows)
        layers.append(py::make_tuple(row.name, row.params, row.macs));
    out["layers"] = layers;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "group-contextualized video feature calibration";

    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<ConfigError>(m, "ConfigError");

    // kernels
    m.def("pool_global", [](const Array& x) { return from_tensor(ops::pool_global(to_tensor(x))); });
    m.def("pool_over_time",
          [](const Array& x) { return from_tensor(ops::pool_over_time(to_tensor(x))); });
    m.def("pool_over_space",
          [](const Array& x) { return from_tensor(ops::pool_over_space(to_tensor(x))); });
    m.def("sigmoid", [](const Array& x) { return from_tensor(ops::sigmoid(to_tensor(x))); });
    m.def("gate_apply", [](const Array& x, const Array& g) {
        return from_tensor(ops::gate_apply(to_tensor(x), to_tensor(g)));
    });
    m.def(
        "temporal_shift",
        [](const Array& x, double fold_ratio) {
            auto t = to_tensor(x);
            return from_tensor(ops::temporal_shift(t, ops::shift_fold(t.shape.c, fold_ratio)));
        },
        py::arg("x"), py::arg("fold_ratio") = 0.125);
    m.def(
        "conv3d",
        [](const Array& x, const Array& kernel, std::int64_t st, std::int64_t sh, std::int64_t sw,
           std::int64_t groups) {
            if (kernel.ndim() != 5) throw DimensionError("kernel must be [Cout,Cin/g,kT,kH,kW]");
            auto t = to_tensor(x);
            auto p = ops::make_same_conv<double>(t.shape.c, kernel.shape(0), kernel.shape(2),
                                                 kernel.shape(3), kernel.shape(4), st, sh, sw,
                                                 groups, false);
            std::copy(kernel.data(), kernel.data() + p.kernel.size(), p.kernel.begin());
            return from_tensor(ops::conv(t, p));
        },
        py::arg("x"), py::arg("kernel"), py::arg("st") = 1, py::arg("sh") = 1, py::arg("sw") = 1,
        py::arg("groups") = 1, "same-padded cross-correlation over (T,H,W)");

    // gc module
    py::class_<PyGcModule>(m, "GcModule")
        .def(py::init<std::int64_t, const std::string&, const std::string&, bool, std::int64_t,
                      std::uint64_t>(),
             py::arg("channels"), py::arg("p") = "1", py::arg("placement") = "standard",
             py::arg("batchnorm") = true, py::arg("block_index") = 0, py::arg("seed") = 0)
        .def("forward", &PyGcModule::forward)
        .def("assignment", &PyGcModule::assignment)
        .def_property_readonly("chunk_size", &PyGcModule::chunk_size)
        .def_property_readonly("num_chunks", &PyGcModule::num_chunks);

    m.def(
        "chunk_assignment",
        [](const std::string& p, const std::string& placement, std::int64_t channels,
           std::int64_t block_index) {
            GcConfig cfg;
            cfg.p = parse_ratio(p);
            cfg.placement = placement == "loop" ? Placement::loop : Placement::standard;
            auto a = chunk_assignment(cfg, channels, block_index);
            return std::vector<std::int64_t>(a.begin(), a.end());
        },
        py::arg("p"), py::arg("placement"), py::arg("channels"), py::arg("block_index") = 0);

    // accounting
    m.def(
        "ecal_param_count",
        [](const std::string& kind, const std::string& p, std::int64_t channels,
           const std::string& mode) {
            auto k = parse_calibrator(kind);
            if (!k) throw ConfigError("unknown calibrator: " + kind);
            return ecal_param_count(*k, parse_ratio(p), channels,
                                    mode == "full" ? CountingMode::full : CountingMode::published);
        },
        py::arg("kind"), py::arg("p"), py::arg("channels"), py::arg("mode") = "published");
    m.def(
        "gc_param_count",
        [](const std::string& p, std::int64_t channels, const std::string& mode) {
            return gc_param_count(parse_ratio(p), channels,
                                  mode == "full" ? CountingMode::full : CountingMode::published);
        },
        py::arg("p"), py::arg("channels"), py::arg("mode") = "published");
    m.def("percentage_table", [](const std::string& p) {
        std::vector<std::pair<std::string, double>> rows;
        for (const auto& row : percentage_table(parse_ratio(p))) rows.emplace_back(row.name, row.pct);
        return rows;
    });
    m.def("model_count", &count_model, py::arg("style") = "tsn", py::arg("calibrator") = "gc",
          py::arg("p") = "1", py::arg("placement") = "standard", py::arg("mask") = "1111",
          py::arg("frames") = 8, py::arg("resolution") = 224, py::arg("classes") = 174);

    // verification
    m.def(
        "gradcheck",
        [](std::uint64_t seed, int trials) {
            GradCheckOptions opt;
            opt.seed = seed;
            opt.trials = trials;
            auto report = run_gradient_checks(opt);
            std::vector<std::tuple<std::string, double, bool>> rows;
            for (const auto& c : report.cases) rows.emplace_back(c.name, c.max_rel_err, c.pass);
            return py::make_tuple(report.all_pass, rows);
        },
        py::arg("seed") = 1, py::arg("trials") = 3);
    m.def("selftest", [](std::uint64_t seed) {
        auto result = run_selftest(seed);
        return result.all_pass();
    }, py::arg("seed") = 1);

    // toy benchmark
    m.def(
        "generate_dataset",
        [](int n_per_class, std::int64_t frames, std::int64_t size, float noise,
           std::uint64_t seed) {
            auto clips = toy::generate_dataset(toy::kClasses, n_per_class, frames, size, size,
                                               noise, seed);
            const Shape s = clips.front().frames.shape;
            py::array_t<float> frames_out(
                {static_cast<std::int64_t>(clips.size()), s.t, s.h, s.w, s.c});
            py::array_t<std::int32_t> labels_out(static_cast<std::int64_t>(clips.size()));
            float* fp = frames_out.mutable_data();
            std::int32_t* lp = labels_out.mutable_data();
            for (std::size_t i = 0; i < clips.size(); ++i) {
                std::copy(clips[i].frames.data.begin(), clips[i].frames.data.end(),
                          fp + i * clips[i].frames.numel());
                lp[i] = clips[i].label;
            }
            return py::make_tuple(frames_out, labels_out);
        },
        py::arg("n_per_class") = 4, py::arg("frames") = 8, py::arg("size") = 32,
        py::arg("noise") = 0.05f, py::arg("seed") = 1);

    m.attr("__version__") = "0.1.0";
}
