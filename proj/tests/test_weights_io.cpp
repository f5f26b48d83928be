#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "gcv/toybench.hpp"
#include "gcv/weights_io.hpp"

using namespace gcv;

TEST_CASE("weight container roundtrip preserves every entry bit-exactly") {
    Rng rng(91);
    WeightContainer c;
    std::vector<float> a(40);
    for (auto& v : a) v = static_cast<float>(rng.uniform(-2, 2));
    std::vector<double> b(12);
    for (auto& v : b) v = rng.uniform(-2, 2);
    c.add("layer.a", {4, 10}, a);
    c.add("layer.b", {12}, b);

    const std::string path = "roundtrip_test.gcw";
    c.save(path);
    auto back = WeightContainer::load(path);
    REQUIRE(back.entries.size() == 2);
    const WeightEntry* ea = back.find("layer.a");
    REQUIRE(ea != nullptr);
    CHECK(!ea->f64);
    CHECK(ea->extents == std::vector<std::uint64_t>{4, 10});
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(ea->data_f32[i] == a[i]);
    const WeightEntry* eb = back.find("layer.b");
    REQUIRE(eb != nullptr);
    CHECK(eb->f64);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(eb->data_f64[i] == b[i]);
    std::remove(path.c_str());
}

TEST_CASE("model pack/unpack restores parameters and running stats") {
    auto spec = toy::micro_spec("gc", Ratio(1, 1), 4, 16);
    auto net = build_network<float>(spec, 31);
    // Perturb running stats so the buffer path is exercised.
    net.visit_buffers([](const std::string&, const auto&, std::vector<float>& v) {
        for (auto& x : v) x += 0.25f;
    });
    auto packed = pack_model(net);

    auto other = build_network<float>(spec, 32);
    unpack_model(other, packed);
    bool same = true;
    std::vector<float> flat_a, flat_b;
    net.visit([&](const std::string&, const auto&, std::vector<float>& v, std::vector<float>&) {
        flat_a.insert(flat_a.end(), v.begin(), v.end());
    });
    other.visit([&](const std::string&, const auto&, std::vector<float>& v, std::vector<float>&) {
        flat_b.insert(flat_b.end(), v.begin(), v.end());
    });
    REQUIRE(flat_a.size() == flat_b.size());
    for (std::size_t i = 0; i < flat_a.size(); ++i) same = same && flat_a[i] == flat_b[i];
    CHECK(same);

    Rng rng(92);
    Tensor<float> x(Shape{1, 4, 16, 16, 1});
    for (auto& v : x.data) v = static_cast<float>(rng.uniform(0, 1));
    auto ya = net.forward_classify(x);
    auto yb = other.forward_classify(x);
    for (std::size_t i = 0; i < ya.data.size(); ++i) CHECK(ya.data[i] == yb.data[i]);
}

TEST_CASE("loader rejects bad files") {
    const std::string path = "bad_test.gcw";

    {
        std::ofstream out(path, std::ios::binary);
        out << "NOPE";
    }
    CHECK_THROWS_AS(WeightContainer::load(path), IoError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "GCW1";
        std::uint32_t version = 9, count = 0;
        out.write(reinterpret_cast<char*>(&version), 4);
        out.write(reinterpret_cast<char*>(&count), 4);
    }
    CHECK_THROWS_AS(WeightContainer::load(path), IoError);

    // Truncated payload.
    {
        WeightContainer c;
        c.add("x", {8}, std::vector<float>(8, 1.0f));
        c.save(path);
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
    }
    CHECK_THROWS_AS(WeightContainer::load(path), IoError);

    CHECK_THROWS_AS(WeightContainer::load("does_not_exist.gcw"), IoError);
    std::remove(path.c_str());

    auto spec = toy::micro_spec("gc", Ratio(1, 1), 4, 16);
    auto net = build_network<float>(spec, 33);
    WeightContainer incomplete = pack_model(net);
    incomplete.entries.pop_back();
    auto other = build_network<float>(spec, 34);
    CHECK_THROWS_AS(unpack_model(other, incomplete), IoError);
}
