// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "pfbmux/errors.hpp"
#include "pfbmux/io.hpp"
#include "support.hpp"

using namespace pfbmux;
using pfbmux::testing::temp_path;

namespace {

void write_bytes(const std::string& path, const std::vector<char>& b) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("cf32 is raw little-endian float pairs") {
    const std::string p = temp_path("layout.cf32");
    write_cf32(p, std::vector<cplx>{cplx(1.0, -2.0)});
    std::ifstream in(p, std::ios::binary);
    std::vector<char> b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(b.size() == 8);
    float f[2];
    std::memcpy(f, b.data(), 8);
    CHECK(f[0] == 1.0f);
    CHECK(f[1] == -2.0f);
    CHECK(static_cast<unsigned char>(b[3]) == 0x3f);  // 1.0f = 0x3f800000
}

TEST_CASE("cf32 roundtrip is bit identical for float-representable samples") {
    const std::string p = temp_path("roundtrip.cf32");
    std::vector<cplx> x;
    for (const auto& v : pfbmux::testing::rand_cplx(1000, 3))
        x.emplace_back(static_cast<float>(v.real()), static_cast<float>(v.imag()));
    write_cf32(p, x);
    CHECK(read_cf32(p) == x);
    write_cf32(p, {});
    CHECK(read_cf32(p).empty());
}

TEST_CASE("cf32 errors") {
    CHECK_THROWS_AS(read_cf32(temp_path("does_not_exist.cf32")), IoError);
    const std::string p = temp_path("bad.cf32");
    write_bytes(p, std::vector<char>(12));
    CHECK_THROWS_AS(read_cf32(p), IoError);
    const float nan[2] = {std::numeric_limits<float>::quiet_NaN(), 0.0f};
    std::vector<char> b(8);
    std::memcpy(b.data(), nan, 8);
    write_bytes(p, b);
    CHECK_THROWS_AS(read_cf32(p), IoError);
    CHECK_THROWS_AS(write_cf32(temp_path("no_dir/x.cf32"), std::vector<cplx>{}), IoError);
}

TEST_CASE("json files") {
    const std::string p = temp_path("doc.json");
    write_text_file(p, "{\"a\": [1, 2]}");
    CHECK(read_json_file(p)["a"][1] == 2);
    write_text_file(p, "{\"a\": ");
    CHECK_THROWS_AS(read_json_file(p), ConfigError);
    CHECK_THROWS_AS(read_json_file(temp_path("missing.json")), IoError);
}

TEST_CASE("designed filter json roundtrip") {
    const DesignedFilter d{"analysis", design_windowed_sinc(kPi / 16.0, 129, Window::kaiser(8.0)), 16, 8, 2,
                           Window::kaiser(8.0)};
    const json j = to_json(d);
    CHECK(j["num_taps"] == 129);
    CHECK(j["symmetric"] == true);
    CHECK(j["M"] == 8);
    CHECK(j["bandwidth_norm"].get<double>() == doctest::Approx(kPi / 8.0));
    const auto back = designed_filter_from_json(json::parse(j.dump()));
    CHECK(back.filter.taps() == d.filter.taps());
    CHECK(back.role == "analysis");
    CHECK(back.K == 16);
    CHECK(back.stride == 8);
    CHECK(back.window.kind == Window::Kind::Kaiser);
    json bad = j;
    bad.erase("taps");
    CHECK_THROWS_AS(designed_filter_from_json(bad), ConfigError);
}

TEST_CASE("trained filter json roundtrip") {
    TrainedFilter t;
    t.synthesis = pfbmux::testing::sinc_init_253();
    t.synthesis.half_taps()[3] += 1e-17;
    t.K = 32;
    t.L = 16;
    t.I = 2;
    t.seed = 42;
    t.epochs = 200;
    t.final_loss = 1.25e-4;
    const json j = to_json(t);
    CHECK(j["parameter_count"] == 127);
    CHECK(j["metadata"]["seed"] == 42);
    CHECK_FALSE(j.contains("analysis"));
    const auto back = trained_filter_from_json(json::parse(j.dump()));
    CHECK(back.synthesis.half_taps() == t.synthesis.half_taps());
    CHECK(back.synthesis.total_len() == 253);
    CHECK(back.L == 16);
    CHECK(back.final_loss == t.final_loss);
    CHECK_FALSE(back.analysis.has_value());

    t.analysis = LearnableSynthesisFilter(std::vector<double>(65, 0.01), 129, kPi / 16.0);
    t.analysis_K = 16;
    t.analysis_M = 8;
    const auto with = trained_filter_from_json(json::parse(to_json(t).dump()));
    REQUIRE(with.analysis.has_value());
    CHECK(with.analysis->half_taps() == t.analysis->half_taps());
    CHECK(with.analysis_M == 8);
}

TEST_CASE("plan json") {
    const auto s = pfbmux::testing::three_zigbee(8, 1);
    const auto plan = plan_mux(s, pfbmux::testing::wideband_16());
    const json j = to_json(plan);
    CHECK(j["wideband"]["K_syn"] == 32);
    CHECK(j["wideband"]["subband_interval_hz"].get<double>() == doctest::Approx(0.5e6));
    REQUIRE(j["streams"].size() == 3);
    CHECK(j["streams"][0]["shift"] == -10);
    CHECK(j["streams"][2]["bin_map"].get<std::vector<std::size_t>>() == plan.streams[2].bin_map);
    const json d = to_json(plan_dft_mux(s, pfbmux::testing::wideband_16(), 8));
    CHECK(d["idft_size"] == 32);
}

}
