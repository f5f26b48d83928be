#include <sstream>

#include "gcv/backbone_spec.hpp"

namespace gcv {

std::string style_name(BlockStyle s) {
    switch (s) {
        case BlockStyle::tsn: return "tsn";
        case BlockStyle::tsm: return "tsm";
        case BlockStyle::gst: return "gst";
    }
    return "?";
}

BlockStyle parse_style(const std::string& s) {
    if (s == "tsn") return BlockStyle::tsn;
    if (s == "tsm") return BlockStyle::tsm;
    if (s == "gst") return BlockStyle::gst;
    throw ConfigError("unknown style: " + s);
}

void NetworkSpec::validate() const {
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (frames < 1 || resolution < 1 || in_channels < 1)
        throw ConfigError("frames/resolution/channels must be >= 1");
    if (calibrator == SiteChoice::gc || calibrator == SiteChoice::single) {
        // Trip the divisibility checks for every masked stage width now, so a
        // bad p fails at build time rather than mid-forward.
        const auto st = stages();
        for (std::size_t s = 0; s < st.size(); ++s)
            if (mask[s]) gc_num_chunks(p, st[s].width);
    }
    if (calibrator != SiteChoice::none) {
        bool any = false;
        const auto st = stages();
        for (std::size_t s = 0; s < st.size(); ++s) any = any || mask[s];
        if (!any) throw ConfigError("calibrator requested but the stage mask is empty");
    }
}

static std::string calibrator_field(const NetworkSpec& spec) {
    switch (spec.calibrator) {
        case SiteChoice::none: return "none";
        case SiteChoice::gc: return "gc";
        case SiteChoice::single:
        case SiteChoice::comparison: return calibrator_name(spec.kind);
    }
    return "none";
}

std::string NetworkSpec::render() const {
    std::ostringstream out;
    out << "style=" << style_name(style) << "\n";
    out << "depth=" << (depth == NetworkDepth::resnet50 ? "50" : "micro") << "\n";
    out << "calibrator=" << calibrator_field(*this) << "\n";
    out << "p=" << p.str() << "\n";
    out << "placement=" << (placement == Placement::loop ? "loop" : "standard") << "\n";
    out << "mask=";
    for (std::size_t s = 0; s < stages().size(); ++s) out << (mask[s] ? '1' : '0');
    out << "\n";
    out << "frames=" << frames << "\n";
    out << "resolution=" << resolution << "\n";
    out << "classes=" << classes << "\n";
    out << "channels=" << in_channels << "\n";
    out << "fold=" << fold_ratio << "\n";
    return out.str();
}

static SiteChoice choice_for(const std::string& cal, CalibratorKind& kind) {
    if (cal == "none") return SiteChoice::none;
    if (cal == "gc") return SiteChoice::gc;
    auto k = parse_calibrator(cal);
    if (!k) throw ConfigError("unknown calibrator: " + cal);
    kind = *k;
    switch (*k) {
        case CalibratorKind::ecal_g:
        case CalibratorKind::ecal_s:
        case CalibratorKind::ecal_t:
        case CalibratorKind::ecal_l: return SiteChoice::single;
        default: return SiteChoice::comparison;
    }
}

NetworkSpec NetworkSpec::parse(const std::string& text) {
    NetworkSpec spec;
    std::istringstream in(text);
    std::string line;
    std::string calibrator = "none";
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("bad config line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "style") spec.style = parse_style(value);
        else if (key == "depth") {
            if (value == "50") spec.depth = NetworkDepth::resnet50;
            else if (value == "micro") spec.depth = NetworkDepth::micro;
            else throw ConfigError("unknown depth: " + value);
        } else if (key == "calibrator") calibrator = value;
        else if (key == "p") spec.p = parse_ratio(value);
        else if (key == "placement") {
            if (value == "standard") spec.placement = Placement::standard;
            else if (value == "loop") spec.placement = Placement::loop;
            else throw ConfigError("unknown placement: " + value);
        } else if (key == "mask") {
            if (value.size() > 4) throw ConfigError("mask has too many stages: " + value);
            spec.mask = {false, false, false, false};
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (value[i] != '0' && value[i] != '1')
                    throw ConfigError("mask must be 0/1 digits: " + value);
                spec.mask[i] = value[i] == '1';
            }
        } else if (key == "frames") spec.frames = std::stoll(value);
        else if (key == "resolution") spec.resolution = std::stoll(value);
        else if (key == "classes") spec.classes = std::stoll(value);
        else if (key == "channels") spec.in_channels = std::stoll(value);
        else if (key == "fold") spec.fold_ratio = std::stod(value);
        else throw ConfigError("unknown config key: " + key);
    }
    spec.calibrator = choice_for(calibrator, spec.kind);
    if (spec.calibrator == SiteChoice::gc && spec.p.zero()) spec.calibrator = SiteChoice::none;
    spec.validate();
    return spec;
}

NetworkSpec NetworkSpec::make(const std::string& style, const std::string& depth,
                              const std::string& calibrator, const Ratio& p,
                              Placement placement, const std::string& mask,
                              std::int64_t frames, std::int64_t resolution,
                              std::int64_t classes, std::int64_t in_channels) {
    std::ostringstream text;
    text << "style=" << style << "\ndepth=" << depth << "\ncalibrator=" << calibrator
         << "\np=" << p.str() << "\nplacement="
         << (placement == Placement::loop ? "loop" : "standard") << "\nmask=" << mask
         << "\nframes=" << frames << "\nresolution=" << resolution << "\nclasses=" << classes
         << "\nchannels=" << in_channels << "\n";
    return parse(text.str());
}

} // namespace gcv
