#include "gcv/accounting.hpp"

#include <iomanip>
#include <sstream>

namespace gcv {

namespace {

std::int64_t sq(std::int64_t v) { return v * v; }

/// Output extent of a same-padded k=3 convolution at the given stride.
std::int64_t strided(std::int64_t extent, std::int64_t stride) {
    return (extent - 1) / stride + 1;
}

struct Extent {
    std::int64_t t, h, w;
    std::int64_t sites() const { return t * h * w; }
};

} // namespace

void CountReport::finalize() {
    total_params = 0;
    total_macs = 0;
    for (const auto& row : rows) {
        total_params += row.params;
        total_macs += row.macs;
    }
}

std::int64_t ecal_param_count(CalibratorKind kind, const Ratio& p, std::int64_t channels,
                              CountingMode mode) {
    const bool full = mode == CountingMode::full;
    switch (kind) {
        case CalibratorKind::ecal_g:
        case CalibratorKind::ecal_s:
        case CalibratorKind::ecal_t:
        case CalibratorKind::ecal_l: {
            const std::int64_t cg = gc_chunk_size(p, channels); // pC/4
            std::int64_t weights = 0;
            switch (kind) {
                case CalibratorKind::ecal_g: weights = sq(cg); break;      // (1/16) p^2 C^2
                case CalibratorKind::ecal_s: weights = 9 * sq(cg); break;  // (9/16) p^2 C^2
                default: weights = 3 * sq(cg); break;                      // (3/16) p^2 C^2
            }
            return full ? weights + cg + 2 * cg : weights; // + bias + BN
        }
        case CalibratorKind::se3d: {
            const std::int64_t r = 16;
            const std::int64_t weights = 2 * sq(channels) / r;
            return full ? weights + channels / r + channels : weights;
        }
        case CalibratorKind::ge3d_g:
            return 0;
        case CalibratorKind::ge3d_c: {
            const std::int64_t weights = 3 * 27 * channels; // depthwise, no bias
            return full ? weights + 3 * 2 * channels : weights;
        }
        case CalibratorKind::s3dg: {
            const std::int64_t weights = sq(channels);
            return full ? weights + channels : weights;
        }
    }
    throw ConfigError("ecal_param_count: unknown kind");
}

std::int64_t gc_param_count(const Ratio& p, std::int64_t channels, CountingMode mode) {
    std::int64_t total = 0;
    for (auto kind : {CalibratorKind::ecal_g, CalibratorKind::ecal_s, CalibratorKind::ecal_t,
                      CalibratorKind::ecal_l})
        total += ecal_param_count(kind, p, channels, mode);
    return total;
}

std::int64_t block_param_count(const BlockSpec& spec, CountingMode mode) {
    const std::int64_t c = spec.width;
    std::int64_t mid = 0;
    if (spec.style == BlockStyle::gst)
        mid = 9 * sq(3 * c / 4) + 27 * sq(c / 4);
    else
        mid = 9 * sq(c);
    if (mode == CountingMode::published)
        return 4 * sq(c) + mid + 4 * sq(c); // 17 C^2 for tsn/tsm

    std::int64_t total = spec.in_channels * c        // reduce
                         + mid                       // middle conv(s)
                         + c * 4 * c                 // expand
                         + 2 * c + 2 * c + 2 * 4 * c; // bn1, bn2, bn3
    if (spec.stride != 1 || spec.in_channels != spec.out_channels())
        total += spec.in_channels * 4 * c + 2 * 4 * c; // projection + its BN
    switch (spec.site) {
        case SiteChoice::none: break;
        case SiteChoice::gc: total += gc_param_count(spec.gc.p, c, mode); break;
        case SiteChoice::single:
            total += ecal_param_count(spec.kind, spec.p, c, mode);
            break;
        case SiteChoice::comparison:
            total += ecal_param_count(spec.kind,
                                      Ratio(1, 1),
                                      spec.kind == CalibratorKind::s3dg ? c : 4 * c, mode);
            break;
    }
    // BN inside the ECals is optional; subtract it back when disabled.
    if ((spec.site == SiteChoice::gc || spec.site == SiteChoice::single) && !spec.gc.batchnorm) {
        const std::int64_t cg = gc_chunk_size(spec.site == SiteChoice::gc ? spec.gc.p : spec.p, c);
        total -= (spec.site == SiteChoice::gc ? 4 : 1) * 2 * cg;
    }
    return total;
}

std::vector<PercentageRow> percentage_table(const Ratio& p) {
    const double p2 = p.value() * p.value();
    const double block = 17.0;
    std::vector<PercentageRow> rows;
    rows.push_back({"ecal_g", 100.0 * (p2 / 16.0) / block});
    rows.push_back({"ecal_s", 100.0 * (9.0 * p2 / 16.0) / block});
    rows.push_back({"ecal_t", 100.0 * (3.0 * p2 / 16.0) / block});
    rows.push_back({"ecal_l", 100.0 * (3.0 * p2 / 16.0) / block});
    rows.push_back({"total", 100.0 * p2 / block});
    return rows;
}

std::string render_percentage_table(const Ratio& p) {
    std::ostringstream out;
    out << "calibrator cost as % of a 17*C^2 residual block (p=" << p.str() << ")\n";
    for (const auto& row : percentage_table(p))
        out << "  " << std::left << std::setw(8) << row.name << std::right << std::fixed
            << std::setprecision(2) << std::setw(6) << row.pct << "%\n";
    return out.str();
}

namespace {

/// Emits the per-layer rows of one calibrator instance.
void count_calibrator(CountReport& report, const std::string& prefix, CalibratorKind kind,
                      std::int64_t cg, const Extent& at, std::int64_t frames, bool batchnorm) {
    auto add = [&](const std::string& suffix, std::int64_t params, std::int64_t macs) {
        report.rows.push_back({prefix + "." + suffix, params, macs});
    };
    switch (kind) {
        case CalibratorKind::ecal_g:
            add("fc", sq(cg) + cg, sq(cg));
            if (batchnorm) add("bn", 2 * cg, 2 * cg);
            break;
        case CalibratorKind::ecal_s:
            add("conv", 9 * sq(cg) + cg, at.h * at.w * 9 * sq(cg));
            if (batchnorm) add("bn", 2 * cg, 2 * at.h * at.w * cg);
            break;
        case CalibratorKind::ecal_t:
            add("conv", 3 * sq(cg) + cg, frames * 3 * sq(cg));
            if (batchnorm) add("bn", 2 * cg, 2 * frames * cg);
            break;
        case CalibratorKind::ecal_l:
            add("conv", 3 * sq(cg) + cg, frames * at.h * at.w * 3 * sq(cg));
            if (batchnorm) add("bn", 2 * cg, 2 * frames * at.h * at.w * cg);
            break;
        case CalibratorKind::se3d: {
            const std::int64_t r = 16;
            add("fc1", cg * (cg / r) + cg / r, cg * (cg / r));
            add("fc2", (cg / r) * cg + cg, cg * (cg / r));
            break;
        }
        case CalibratorKind::ge3d_g:
            break; // parameter-free, no counted ops
        case CalibratorKind::ge3d_c: {
            Extent e = at;
            for (int i = 0; i < 3; ++i) {
                Extent next{e.t, strided(e.h, 2), strided(e.w, 2)};
                add("conv" + std::to_string(i + 1), 27 * cg, next.sites() * 27 * cg);
                add("bn" + std::to_string(i + 1), 2 * cg, 2 * next.sites() * cg);
                e = next;
            }
            break;
        }
        case CalibratorKind::s3dg:
            add("fc", sq(cg) + cg, sq(cg));
            break;
    }
}

CountReport model_count_nobaseline(const NetworkSpec& spec) {
    spec.validate();
    CountReport report;
    auto add = [&](const std::string& name, std::int64_t params, std::int64_t macs) {
        report.rows.push_back({name, params, macs});
    };

    const std::int64_t stem_c = spec.stem_out();
    const std::int64_t stem_k = spec.depth == NetworkDepth::resnet50 ? 7 : 3;
    Extent e{spec.frames, strided(spec.resolution, 2), strided(spec.resolution, 2)};
    add("stem.conv", stem_c * spec.in_channels * stem_k * stem_k,
        e.sites() * stem_c * spec.in_channels * stem_k * stem_k);
    add("stem.bn", 2 * stem_c, 2 * e.sites() * stem_c);
    e = Extent{e.t, strided(e.h, 2), strided(e.w, 2)}; // stem max pool

    std::int64_t in_ch = stem_c;
    std::int64_t site_counter = 0;
    const auto stages = spec.stages();
    for (std::size_t s = 0; s < stages.size(); ++s) {
        for (int b = 0; b < stages[s].blocks; ++b) {
            const std::int64_t c = stages[s].width;
            const std::int64_t out_ch = 4 * c;
            const std::int64_t stride = b == 0 ? stages[s].stride : 1;
            const Extent in = e;
            const Extent out{e.t, strided(e.h, stride), strided(e.w, stride)};
            const std::string prefix =
                "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);

            add(prefix + ".reduce", in_ch * c, in.sites() * c * in_ch);
            add(prefix + ".bn1", 2 * c, 2 * in.sites() * c);
            if (spec.style == BlockStyle::gst) {
                const std::int64_t c2d = 3 * c / 4, c3d = c / 4;
                add(prefix + ".mid", 9 * sq(c2d), out.sites() * c2d * 9 * c2d);
                add(prefix + ".mid3d", 27 * sq(c3d), out.sites() * c3d * 27 * c3d);
            } else {
                add(prefix + ".mid", 9 * sq(c), out.sites() * c * 9 * c);
            }

            const bool masked = spec.calibrator != SiteChoice::none && spec.mask[s];
            if (masked) {
                const std::string site = "gc." + std::to_string(site_counter++);
                const bool bn = spec.ecal_batchnorm();
                if (spec.calibrator == SiteChoice::gc) {
                    const std::int64_t cg = gc_chunk_size(spec.p, c);
                    for (auto kind : {CalibratorKind::ecal_g, CalibratorKind::ecal_s,
                                      CalibratorKind::ecal_t, CalibratorKind::ecal_l})
                        count_calibrator(report, site + "." + calibrator_name(kind), kind, cg,
                                         out, spec.frames, bn);
                } else if (spec.calibrator == SiteChoice::single) {
                    const std::int64_t cg = gc_chunk_size(spec.p, c);
                    count_calibrator(report, site + "." + calibrator_name(spec.kind),
                                     spec.kind, cg, out, spec.frames, bn);
                } else if (spec.kind == CalibratorKind::s3dg) {
                    count_calibrator(report, site + "." + calibrator_name(spec.kind),
                                     spec.kind, c, out, spec.frames, false);
                }
            }

            add(prefix + ".bn2", 2 * c, 2 * out.sites() * c);
            add(prefix + ".expand", c * out_ch, out.sites() * out_ch * c);
            add(prefix + ".bn3", 2 * out_ch, 2 * out.sites() * out_ch);

            if (masked && spec.calibrator == SiteChoice::comparison &&
                spec.kind != CalibratorKind::s3dg) {
                const std::string site = "gc." + std::to_string(site_counter - 1);
                count_calibrator(report, site + "." + calibrator_name(spec.kind), spec.kind,
                                 out_ch, out, spec.frames, false);
            }

            if (stride != 1 || in_ch != out_ch) {
                add(prefix + ".proj", in_ch * out_ch, out.sites() * out_ch * in_ch);
                add(prefix + ".proj_bn", 2 * out_ch, 2 * out.sites() * out_ch);
            }
            in_ch = out_ch;
            e = out;
        }
    }
    add("head", in_ch * spec.classes + spec.classes, in_ch * spec.classes);
    report.finalize();
    return report;
}

} // namespace

CountReport model_count(const NetworkSpec& spec) {
    CountReport report = model_count_nobaseline(spec);
    if (spec.calibrator != SiteChoice::none) {
        NetworkSpec plain = spec;
        plain.calibrator = SiteChoice::none;
        plain.p = Ratio(0, 1);
        CountReport baseline = model_count_nobaseline(plain);
        report.has_baseline = true;
        report.baseline_params = baseline.total_params;
        report.baseline_macs = baseline.total_macs;
    }
    return report;
}

std::string CountReport::render(bool per_layer) const {
    std::ostringstream out;
    if (per_layer) {
        out << std::left << std::setw(34) << "layer" << std::right << std::setw(14) << "params"
            << std::setw(16) << "macs" << "\n";
        for (const auto& row : rows)
            out << std::left << std::setw(34) << row.name << std::right << std::setw(14)
                << row.params << std::setw(16) << row.macs << "\n";
    }
    out << std::left << std::setw(34) << "total" << std::right << std::setw(14) << total_params
        << std::setw(16) << total_macs << "\n";
    out << std::fixed << std::setprecision(1);
    out << "params " << (static_cast<double>(total_params) / 1e6) << "M  macs "
        << (static_cast<double>(total_macs) / 1e9) << "G";
    out << "  (exact " << total_params << " / " << total_macs << ")\n";
    if (has_baseline) {
        out << "baseline " << (static_cast<double>(baseline_params) / 1e6) << "M / "
            << (static_cast<double>(baseline_macs) / 1e9) << "G";
        out << std::setprecision(2) << "  overhead +" << overhead_params_pct() << "% params, +"
            << overhead_macs_pct() << "% macs\n";
    }
    return out.str();
}

std::string CountReport::to_csv() const {
    std::ostringstream out;
    out << "layer,params,macs\n";
    for (const auto& row : rows)
        out << row.name << "," << row.params << "," << row.macs << "\n";
    out << "total," << total_params << "," << total_macs << "\n";
    return out.str();
}

} // namespace gcv
