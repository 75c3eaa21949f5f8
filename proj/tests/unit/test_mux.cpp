// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "pfbmux/errors.hpp"
#include "pfbmux/mux.hpp"
#include "support.hpp"

using namespace pfbmux;
using pfbmux::testing::quick_trained_4x;
using pfbmux::testing::rand_buf;
using pfbmux::testing::rel_err;
using pfbmux::testing::three_zigbee;
using pfbmux::testing::tone_purity_db;
using pfbmux::testing::wideband_16;

namespace {

std::vector<StreamSpec> three_qpsk(std::size_t n_sym, std::uint64_t seed) {
    std::vector<StreamSpec> s;
    const double offs[3] = {-5e6, 0.0, 5e6};
    for (int i = 0; i < 3; ++i)
        s.push_back({"q" + std::to_string(i), 4e6, offs[i], Scheme::Qpsk,
                     gen_qpsk(n_sym, 4, 0.35, seed + static_cast<std::uint64_t>(i), 4e6).second});
    return s;
}

StreamSpec tone_stream(double f, double offset, std::size_t n) {
    return {"tone", 4e6, offset, Scheme::Qpsk, ComplexBuf(mixer(n, f, 4e6), 4e6)};
}

ComplexBuf run_nnpfb(const std::vector<StreamSpec>& s, const WidebandSpec& wb, const PrototypeFilter& syn) {
    const auto plan = plan_mux(s, wb);
    return mux_nnpfb(s, plan, make_nnpfb_banks(plan, syn), wb);
}

PrototypeFilter trained() { return quick_trained_4x().materialize(); }

double band_power(const ComplexBuf& y, std::size_t lo, std::size_t hi) {
    double p = 0.0;
    for (std::size_t n = lo; n < hi; ++n) p += std::norm(y[n]);
    return p / static_cast<double>(hi - lo);
}

std::vector<StreamSpec> zero_except(std::vector<StreamSpec> s, std::size_t keep) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != keep) s[i].payload = ComplexBuf(std::vector<cplx>(s[i].payload.size()), s[i].sample_rate_hz);
    return s;
}

}  // namespace

TEST_SUITE("mux") {

TEST_CASE("plan for three streams on a 16 MHz wideband") {
    const auto s = three_zigbee(64, 1);
    const auto plan = plan_mux(s, wideband_16());
    REQUIRE(plan.streams.size() == 3);
    const long shifts[3] = {-10, 0, 10};
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& p = plan.streams[i];
        CHECK(p.K_ana == 8);
        CHECK(p.M_ana == 4);
        CHECK(p.ratio == 4);
        CHECK(p.shift == shifts[i]);
        REQUIRE(p.bin_map.size() == 8);
        for (std::size_t k = 0; k < 8; ++k) {
            const long kt = k < 4 ? static_cast<long>(k) : static_cast<long>(k) - 8;
            CHECK(p.bin_map[k] == static_cast<std::size_t>((kt + shifts[i] + 32) % 32));
        }
        CHECK(p.bins.size() == 9);
    }
    CHECK(plan.streams[1].bin_map == std::vector<std::size_t>{0, 1, 2, 3, 28, 29, 30, 31});
}

TEST_CASE("identity plan when the stream fills the wideband") {
    const std::vector<StreamSpec> s{{"full", 16e6, 0.0, Scheme::Qpsk, rand_buf(16, 1, 16e6)}};
    const auto plan = plan_mux(s, wideband_16());
    CHECK(plan.streams[0].ratio == 1);
    CHECK(plan.streams[0].K_ana == 32);
    for (std::size_t k = 0; k < 32; ++k) CHECK(plan.streams[0].bin_map[k] == k);
}

TEST_CASE("plan errors") {
    const auto wb = wideband_16();
    auto s = three_zigbee(8, 2);
    s[2].center_offset_hz = 3e6;
    try {
        plan_mux(s, wb);
        FAIL("expected a collision");
    } catch (const PlanError& e) {
        CHECK(std::string(e.what()).find("bin collision between streams 'z1' and 'z2'") != std::string::npos);
    }
    PlanOptions loose;
    loose.allow_overlap = true;
    CHECK_NOTHROW(plan_mux(s, wb, loose));

    s = three_zigbee(8, 2);
    s[0].center_offset_hz = -6.5e6;
    CHECK_THROWS_WITH_AS(plan_mux(s, wb), doctest::Contains("does not fit inside the wideband"), PlanError);
    s[0].center_offset_hz = -5.2e6;
    CHECK_THROWS_WITH_AS(plan_mux(s, wb), doctest::Contains("offset not grid-aligned"), PlanError);
    s[0].center_offset_hz = -5e6;
    s[0].sample_rate_hz = 3.3e6;
    s[0].payload = ComplexBuf({}, 3.3e6);
    CHECK_THROWS_WITH_AS(plan_mux(s, wb), doctest::Contains("rate not divisible by the subband interval"), PlanError);
    CHECK_THROWS_AS(WidebandSpec(16e6, 30, 4), ConfigError);
}

TEST_CASE("adjacent streams touching at the Nyquist edge share a bin") {
    const auto wb = wideband_16();
    auto s = three_zigbee(8, 3);
    s[0].center_offset_hz = -4e6;
    s[2].center_offset_hz = 4e6;
    CHECK_THROWS_AS(plan_mux(s, wb), PlanError);
    RoutingOptions r;
    r.split_nyquist = false;
    CHECK_NOTHROW(plan_mux(s, wb, {r, false}));
}

TEST_CASE("heterogeneous plan") {
    const WidebandSpec wb(40e6, 80, 2);
    const std::vector<StreamSpec> s{{"narrow", 4e6, 15e6, Scheme::Qpsk, ComplexBuf({}, 4e6)},
                                    {"wide", 20e6, 2e6, Scheme::Qpsk, ComplexBuf({}, 20e6)}};
    const auto plan = plan_mux(s, wb);
    CHECK(plan.streams[0].K_ana == 8);
    CHECK(plan.streams[0].ratio == 10);
    CHECK(plan.streams[0].shift == 30);
    CHECK(plan.streams[1].K_ana == 40);
    CHECK(plan.streams[1].ratio == 2);
    CHECK(plan.streams[1].shift == 4);
}

TEST_CASE("single-stream nnpfb equals the normalized cascade") {
    const auto syn = quick_trained_4x();
    const auto model = pfbmux::testing::model_4x(syn);
    const auto x = gen_qpsk(300, 4, 0.35, 4, 4e6).second;
    const std::vector<StreamSpec> s{{"a", 4e6, 0.0, Scheme::Qpsk, x}};
    const auto wb = wideband_16();
    const auto plan = plan_mux(s, wb);
    const auto banks = make_nnpfb_banks(plan, syn.materialize());
    CHECK(nnpfb_delay(plan, banks) == model.lag());
    const auto y = mux_nnpfb(s, plan, banks, wb);
    REQUIRE(y.size() == 4 * x.size());
    const auto f = forward(x, model);
    const double g = cascade_gain(model.analysis, model.synthesis_config()) * model.gain();
    std::vector<cplx> ref(y.size());
    for (std::size_t n = 0; n < ref.size(); ++n) ref[n] = f[n + static_cast<std::size_t>(model.lag())] / g;
    CHECK(rel_err(y.samples(), ref) < 1e-10);

    const auto hi = gen_qpsk(300, 16, 0.35, 4, 16e6).second;
    CHECK(nmse_db_at(y, hi, 0) <= -30.0);
}

TEST_CASE("tones land at offset plus tone frequency") {
    const auto wb = wideband_16();
    const double offs[3] = {-5e6, 0.0, 5e6};
    const std::size_t n = 2048;
    for (double off : offs) {
        const std::vector<StreamSpec> s{tone_stream(0.5e6, off, n)};
        const double w = 2.0 * kPi * (off + 0.5e6) / 16e6;
        CHECK(tone_purity_db(run_nnpfb(s, wb, trained()).samples(), w, 1000, 7000) < -30.0);
        CHECK(tone_purity_db(mux_direct(s, wb).samples(), w, 1000, 7000) < -30.0);
        CHECK(tone_purity_db(mux_dft(s, wb).samples(), w, 1000, 7000) < -30.0);
        CHECK(periodogram_peak_hz(mux_dft(s, wb), 1024) == doctest::Approx(off + 0.5e6));
    }
}

TEST_CASE("all multiplexers superpose") {
    const auto wb = wideband_16();
    const auto s = three_zigbee(64, 5);
    const auto f = trained();
    const auto all_n = run_nnpfb(s, wb, f), all_d = mux_direct(s, wb), all_f = mux_dft(s, wb);
    std::vector<cplx> sn(all_n.size()), sd(all_d.size()), sf(all_f.size());
    for (std::size_t k = 0; k < 3; ++k) {
        const auto one = zero_except(s, k);
        const auto a = run_nnpfb(one, wb, f), b = mux_direct(one, wb), c = mux_dft(one, wb);
        for (std::size_t i = 0; i < sn.size(); ++i) {
            sn[i] += a[i];
            sd[i] += b[i];
            sf[i] += c[i];
        }
    }
    CHECK(rel_err(all_n.samples(), sn) < 1e-10);
    CHECK(rel_err(all_d.samples(), sd) < 1e-10);
    CHECK(rel_err(all_f.samples(), sf) < 1e-10);
    CHECK(all_n.size() == all_d.size());
    CHECK(all_n.size() == all_f.size());
}

TEST_CASE("direct mux equals brute-force interpolation and mixing") {
    const WidebandSpec wb(16e6, 32, 2);
    const auto x = rand_buf(40, 6, 4e6);
    const std::vector<StreamSpec> s{{"a", 4e6, 3e6, Scheme::Qpsk, x}};
    DirectOptions opt;
    opt.num_taps = 33;
    const auto y = mux_direct(s, wb, opt);
    const auto g = design_windowed_sinc(kPi / 4.0, 33, Window::kaiser(8.0));
    REQUIRE(y.size() == 160);
    std::vector<cplx> ref(160);
    for (std::size_t n = 0; n < 160; ++n) {
        cplx acc{};
        for (std::size_t m = 0; m < x.size(); ++m) {
            const long i = static_cast<long>(n) + 16 - static_cast<long>(4 * m);
            if (i >= 0 && i < 33) acc += 4.0 * g[static_cast<std::size_t>(i)] * x[m];
        }
        ref[n] = acc * std::polar(1.0, 2.0 * kPi * 3.0 * static_cast<double>(n) / 16.0);
    }
    CHECK(rel_err(y.samples(), ref) < 1e-12);
}

TEST_CASE("dft layout and identity") {
    const auto lay = plan_dft_mux(three_zigbee(8, 1), wideband_16(), 8);
    CHECK(lay.resolution_hz == doctest::Approx(0.5e6));
    CHECK(lay.idft_size == 32);
    CHECK(lay.dft_sizes == std::vector<std::size_t>{8, 8, 8});
    CHECK(lay.shifts == std::vector<long>{-10, 0, 10});
    CHECK(lay.occupied_bins == 24);

    const auto x = rand_buf(37, 7, 16e6);
    const std::vector<StreamSpec> s{{"a", 16e6, 0.0, Scheme::Qpsk, x}};
    CHECK(rel_err(mux_dft(s, wideband_16(), 8).samples(), x.samples()) < 1e-12);
    CHECK_THROWS_AS(plan_dft_mux(s, wideband_16(), 0), ConfigError);
    auto off = three_zigbee(8, 1);
    off[0].center_offset_hz = -5.25e6;
    CHECK_THROWS_AS(plan_dft_mux(off, wideband_16(), 8), PlanError);
}

TEST_CASE("empty payloads give empty output") {
    auto s = three_zigbee(8, 1);
    for (auto& v : s) v.payload = ComplexBuf({}, 4e6);
    const auto wb = wideband_16();
    CHECK(run_nnpfb(s, wb, trained()).empty());
    CHECK(mux_direct(s, wb).empty());
    CHECK(mux_dft(s, wb).empty());
}

TEST_CASE("nnpfb input validation") {
    const auto wb = wideband_16();
    const auto s = three_zigbee(8, 1);
    const auto plan = plan_mux(s, wb);
    const auto banks = make_nnpfb_banks(plan, trained());
    const std::vector<StreamSpec> two(s.begin(), s.begin() + 2);
    CHECK_THROWS_AS(mux_nnpfb(two, plan, banks, wb), PlanError);
    CHECK_THROWS_AS(mux_nnpfb(s, plan, banks, WidebandSpec(32e6, 32, 2)), PlanError);
}

TEST_CASE("demux recovers every stream and leaves gaps empty") {
    const auto wb = wideband_16();
    const auto s = three_qpsk(1500, 8);
    const auto f = trained();
    for (int method = 0; method < 2; ++method) {
        const auto y = method == 0 ? run_nnpfb(s, wb, f) : mux_direct(s, wb);
        for (const auto& st : s) {
            const auto r = demux_reference(y, st, wb);
            CHECK(r.size() == st.payload.size());
            CHECK(nmse_db_at(r, st.payload, 0) <= -35.0);
        }
        const StreamSpec gap{"gap", 1e6, 2.5e6, Scheme::Qpsk, ComplexBuf({}, 1e6)};
        const auto g = demux_reference(y, gap, wb);
        const double rel = band_power(g, 100, g.size() - 100) / band_power(y, 0, y.size());
        CHECK(10.0 * std::log10(rel) <= -40.0);
    }
}

TEST_CASE("a lone stream does not leak into its neighbours") {
    const auto wb = wideband_16();
    const auto s = zero_except(three_zigbee(256, 9), 0);
    const auto y = run_nnpfb(s, wb, trained());
    const auto own = demux_reference(y, s[0], wb), next = demux_reference(y, s[1], wb);
    CHECK(10.0 * std::log10(next.mean_power() / own.mean_power()) <= -30.0);
}

TEST_CASE("dft mux reconstructs worse than nnpfb") {
    const auto wb = wideband_16();
    const auto s = three_zigbee(256, 10);
    const auto yn = run_nnpfb(s, wb, trained()), yf = mux_dft(s, wb);
    for (const auto& st : s) {
        const double n = nmse_db_at(demux_reference(yn, st, wb), st.payload, 0);
        const double d = nmse_db_at(demux_reference(yf, st, wb), st.payload, 0);
        CHECK(d >= n + 3.0);
    }
}

TEST_CASE("heterogeneous streams are recovered") {
    const WidebandSpec wb(40e6, 80, 2);
    const std::vector<StreamSpec> s{
        {"narrow", 4e6, 15e6, Scheme::Qpsk, gen_qpsk(600, 4, 0.35, 11, 4e6).second},
        {"wide", 20e6, 2e6, Scheme::Qpsk, gen_qpsk(3000, 4, 0.35, 12, 20e6).second}};
    const auto f = design_windowed_sinc(2.0 * kPi / 80.0, 8 * 80 + 1, Window::kaiser(8.0));
    const auto plan = plan_mux(s, wb);
    const auto banks = make_nnpfb_banks(plan, f);
    const auto y = mux_nnpfb(s, plan, banks, wb);
    CHECK(y.size() == std::max(s[0].payload.size() * 10, s[1].payload.size() * 2));
    for (const auto& st : s) CHECK(nmse_db_at(demux_reference(y, st, wb), st.payload, 0) <= -30.0);
    const auto yd = mux_direct(s, wb);
    for (const auto& st : s) CHECK(nmse_db_at(demux_reference(yd, st, wb), st.payload, 0) <= -30.0);
}

TEST_CASE("mixer phase is exact for rational frequencies") {
    const auto w = mixer(1000004, 3e6, 16e6);
    CHECK(std::abs(w[1000003] - std::polar(1.0, 2.0 * kPi * static_cast<double>(3 * 1000003 % 16) / 16.0)) < 1e-13);
    CHECK(std::abs(w[16] - cplx(1.0, 0.0)) < 1e-15);
}

}
