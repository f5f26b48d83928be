#pragma once

// Binary weight container:
//
//   magic   "GCW1" (4 bytes)
//   version u32 little-endian (currently 1)
//   count   u32 little-endian
//   entry*  name_len u32 | name bytes (UTF-8) | dtype u8 (0=f32, 1=f64)
//           | rank u8 | extents u64[rank] | payload (little-endian scalars)
//
// Loaders reject unknown magic or version and truncated files.

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "gcv/backbone.hpp"

namespace gcv {

static_assert(std::endian::native == std::endian::little,
              "weight container I/O assumes a little-endian host");

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WeightEntry {
    std::string name;
    bool f64{false};
    std::vector<std::uint64_t> extents;
    std::vector<float> data_f32;
    std::vector<double> data_f64;

    std::uint64_t element_count() const {
        std::uint64_t n = 1;
        for (auto e : extents) n *= e;
        return n;
    }
};

class WeightContainer {
  public:
    std::vector<WeightEntry> entries;

    void add(const std::string& name, const std::vector<std::int64_t>& dims,
             const std::vector<float>& values);
    void add(const std::string& name, const std::vector<std::int64_t>& dims,
             const std::vector<double>& values);

    const WeightEntry* find(const std::string& name) const;

    void save(const std::string& path) const;
    static WeightContainer load(const std::string& path);
};

namespace detail {
template <typename T>
void entry_values(const WeightEntry& e, std::vector<T>& out) {
    out.resize(e.element_count());
    if (e.f64)
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(e.data_f64[i]);
    else
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<T>(e.data_f32[i]);
}
} // namespace detail

/// Serializes learnable parameters plus batch-norm running stats.
template <typename T>
WeightContainer pack_model(Network<T>& net) {
    WeightContainer c;
    net.visit([&](const std::string& name, const std::vector<std::int64_t>& dims,
                  std::vector<T>& value, std::vector<T>&) { c.add(name, dims, value); });
    net.visit_buffers([&](const std::string& name, const std::vector<std::int64_t>& dims,
                          std::vector<T>& value) { c.add(name, dims, value); });
    return c;
}

/// Restores every parameter and buffer by name; throws IoError when an entry
/// is missing or sized differently.
template <typename T>
void unpack_model(Network<T>& net, const WeightContainer& c) {
    auto restore = [&](const std::string& name, std::vector<T>& value) {
        const WeightEntry* e = c.find(name);
        if (!e) throw IoError("weight container is missing entry: " + name);
        if (e->element_count() != value.size())
            throw IoError("weight entry " + name + " has " + std::to_string(e->element_count()) +
                          " elements, expected " + std::to_string(value.size()));
        detail::entry_values(*e, value);
    };
    net.visit([&](const std::string& name, const std::vector<std::int64_t>&,
                  std::vector<T>& value, std::vector<T>&) { restore(name, value); });
    net.visit_buffers([&](const std::string& name, const std::vector<std::int64_t>&,
                          std::vector<T>& value) { restore(name, value); });
}

} // namespace gcv
