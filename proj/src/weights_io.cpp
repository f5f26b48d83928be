#include "gcv/weights_io.hpp"

#include <cstring>
#include <fstream>

namespace gcv {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'W', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::vector<std::uint64_t> to_extents(const std::vector<std::int64_t>& dims) {
    std::vector<std::uint64_t> out;
    out.reserve(dims.size());
    for (auto d : dims) out.push_back(static_cast<std::uint64_t>(d));
    return out;
}

} // namespace

void WeightContainer::add(const std::string& name, const std::vector<std::int64_t>& dims,
                          const std::vector<float>& values) {
    WeightEntry e;
    e.name = name;
    e.f64 = false;
    e.extents = to_extents(dims);
    e.data_f32 = values;
    if (e.element_count() != values.size())
        throw IoError("entry " + name + ": extents do not match value count");
    entries.push_back(std::move(e));
}

void WeightContainer::add(const std::string& name, const std::vector<std::int64_t>& dims,
                          const std::vector<double>& values) {
    WeightEntry e;
    e.name = name;
    e.f64 = true;
    e.extents = to_extents(dims);
    e.data_f64 = values;
    if (e.element_count() != values.size())
        throw IoError("entry " + name + ": extents do not match value count");
    entries.push_back(std::move(e));
}

const WeightEntry* WeightContainer::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

void WeightContainer::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        const char dtype = e.f64 ? 1 : 0;
        out.write(&dtype, 1);
        const char rank = static_cast<char>(e.extents.size());
        out.write(&rank, 1);
        for (auto ext : e.extents) put_u64(out, ext);
        if (e.f64)
            out.write(reinterpret_cast<const char*>(e.data_f64.data()),
                      static_cast<std::streamsize>(e.data_f64.size() * sizeof(double)));
        else
            out.write(reinterpret_cast<const char*>(e.data_f32.data()),
                      static_cast<std::streamsize>(e.data_f32.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed: " + path);
}

WeightContainer WeightContainer::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open weight file: " + path);
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a weight container: " + path);
    const std::uint32_t version = get_u32(in);
    if (version != kVersion)
        throw IoError("unsupported weight container version " + std::to_string(version));
    const std::uint32_t count = get_u32(in);
    WeightContainer c;
    c.entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        WeightEntry e;
        const std::uint32_t name_len = get_u32(in);
        if (!in || name_len > (1u << 20)) throw IoError("corrupt entry name in " + path);
        e.name.resize(name_len);
        in.read(e.name.data(), name_len);
        char dtype = 0, rank = 0;
        in.read(&dtype, 1);
        in.read(&rank, 1);
        if (!in || (dtype != 0 && dtype != 1) || rank < 0)
            throw IoError("corrupt entry header in " + path);
        e.f64 = dtype == 1;
        e.extents.resize(static_cast<std::size_t>(rank));
        for (auto& ext : e.extents) ext = get_u64(in);
        const std::uint64_t n = e.element_count();
        if (!in || n > (1ull << 32)) throw IoError("corrupt extents in " + path);
        if (e.f64) {
            e.data_f64.resize(n);
            in.read(reinterpret_cast<char*>(e.data_f64.data()),
                    static_cast<std::streamsize>(n * sizeof(double)));
        } else {
            e.data_f32.resize(n);
            in.read(reinterpret_cast<char*>(e.data_f32.data()),
                    static_cast<std::streamsize>(n * sizeof(float)));
        }
        if (!in) throw IoError("truncated weight container: " + path);
        c.entries.push_back(std::move(e));
    }
    return c;
}

} // namespace gcv
