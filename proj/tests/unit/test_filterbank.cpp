// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "doctest.h"
#include "pfbmux/errors.hpp"
#include "pfbmux/filterbank.hpp"
#include "pfbmux/learn.hpp"
#include "support.hpp"

using namespace pfbmux;
using pfbmux::testing::rand_buf;
using pfbmux::testing::rand_cplx;
using pfbmux::testing::rand_real;
using pfbmux::testing::rel_err;

namespace {

cplx wk(long long e, std::size_t K) {
    const long double a = 2.0L * 3.141592653589793238462643383279L * static_cast<long double>(e) / static_cast<long double>(K);
    return cplx(static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a)));
}

Matrix<cplx> brute_afb(const ComplexBuf& x, const AnalysisBankConfig& c, std::size_t T) {
    Matrix<cplx> X(c.K, T);
    const auto& h = c.prototype.taps();
    for (std::size_t m = 0; m < T; ++m)
        for (std::size_t k = 0; k < c.K; ++k)
            for (std::size_t n = 0; n < x.size(); ++n) {
                const long i = static_cast<long>(m * c.M) - static_cast<long>(n);
                if (i >= 0 && i < static_cast<long>(h.size()))
                    X(k, m) += h[static_cast<std::size_t>(i)] * x[n] * wk(-static_cast<long long>(k * n), c.K);
            }
    return X;
}

std::vector<cplx> brute_sfb(const Matrix<cplx>& S, const SynthesisBankConfig& c, std::size_t Ns) {
    std::vector<cplx> s(Ns);
    const auto& f = c.prototype.taps();
    for (std::size_t n = 0; n < Ns; ++n)
        for (std::size_t k = 0; k < c.K; ++k) {
            cplx acc{};
            for (std::size_t m = 0; m < S.cols(); ++m) {
                const long i = static_cast<long>(n) - static_cast<long>(c.L * m);
                if (i >= 0 && i < static_cast<long>(f.size())) acc += S(k, m) * f[static_cast<std::size_t>(i)];
            }
            s[n] += wk(static_cast<long long>(k * n), c.K) * acc;
        }
    return s;
}

SubbandFrame rand_frame(std::size_t K, std::size_t T, std::size_t I, std::uint64_t seed) {
    Matrix<cplx> d(K, T);
    const auto v = rand_cplx(K * T, seed);
    for (std::size_t i = 0; i < v.size(); ++i) d.raw()[i] = v[i];
    return SubbandFrame(std::move(d), static_cast<double>(I), 1.0);
}

PrototypeFilter rand_proto(std::size_t n, std::uint64_t seed) { return PrototypeFilter(rand_real(n, seed), kPi, false); }

struct Geo {
    std::size_t K, S, I;
};
const Geo kGeos[] = {{4, 2, 2}, {8, 4, 2}, {16, 8, 2}, {32, 16, 2}};

}  // namespace

TEST_SUITE("filterbank") {

TEST_CASE("bank config validation") {
    CHECK_THROWS_AS(AnalysisBankConfig(6, 4, PrototypeFilter()), ConfigError);
    CHECK_THROWS_AS(SynthesisBankConfig(8, 3, PrototypeFilter()), ConfigError);
    const AnalysisBankConfig a(16, 8, default_analysis_prototype(16));
    CHECK(a.I == 2);
    CHECK(a.prototype.size() == 129);
    CHECK(a.prototype.cutoff_norm() == doctest::Approx(kPi / 16));
    const auto f = default_synthesis_prototype(32);
    CHECK(f.size() == 257);
    CHECK(f.cutoff_norm() == doctest::Approx(2 * kPi / 32));
    CHECK_THROWS_AS(SubbandFrame(Matrix<cplx>(2, 2), 3.0, 2.0), ConfigError);
}

TEST_CASE("analysis frame carries the oversampled rate") {
    const AnalysisBankConfig a(8, 4, default_analysis_prototype(8));
    const auto X = afb_polyphase(rand_buf(100, 1, 4e6), a);
    CHECK(X.subband_rate_hz == doctest::Approx(1e6));
    CHECK(X.subband_interval_hz == doctest::Approx(0.5e6));
    CHECK(X.subband_rate_hz == doctest::Approx(a.I * X.subband_interval_hz));
    CHECK(X.T() == analysis_frame_length(100, a));
    CHECK(analysis_frame_length(0, a) == 0);
}

TEST_CASE("afb_direct matches the literal triple loop") {
    const AnalysisBankConfig c(4, 2, rand_proto(7, 2));
    const auto x = rand_buf(32, 3);
    const auto X = afb_direct(x, c);
    CHECK(rel_err(X.data, brute_afb(x, c, X.T())) < 1e-12);
}

TEST_CASE("zero inputs give zero outputs") {
    const AnalysisBankConfig a(8, 4, default_analysis_prototype(8));
    const SynthesisBankConfig s(8, 4, default_synthesis_prototype(8));
    const ComplexBuf z(std::vector<cplx>(50), 1.0);
    const auto Xd = afb_direct(z, a), Xp = afb_polyphase(z, a);
    for (const auto& v : Xd.data.raw()) CHECK(v == cplx{});
    for (const auto& v : Xp.data.raw()) CHECK(v == cplx{});
    const SubbandFrame S(Matrix<cplx>(8, 6), 2.0, 1.0);
    const auto sd = sfb_direct(S, s), sp = sfb_polyphase(S, s);
    for (const auto& v : sd.samples()) CHECK(v == cplx{});
    for (const auto& v : sp.samples()) CHECK(v == cplx{});
}

TEST_CASE("a subband-centre tone concentrates in its row") {
    const std::size_t K = 16, k0 = 5;
    const AnalysisBankConfig a(K, 8, default_analysis_prototype(K));
    std::vector<cplx> x(1024);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = wk(static_cast<long long>(k0 * n), K);
    const auto X = afb_direct(ComplexBuf(x, 1.0), a);
    double row = 0.0, total = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t m = 0; m < X.T(); ++m) {
            total += std::norm(X.data(k, m));
            if (k == k0) row += std::norm(X.data(k, m));
        }
    CHECK(row / total >= 0.95);
}

TEST_CASE("afb_polyphase equals afb_direct") {
    for (const auto& g : kGeos) {
        const AnalysisBankConfig c(g.K, g.S, default_analysis_prototype(g.K));
        for (std::uint64_t trial = 0; trial < 5; ++trial) {
            const auto x = rand_buf(3 * g.K + 7 * trial + 1, 40 + trial);
            const auto D = afb_direct(x, c), P = afb_polyphase(x, c);
            CHECK(rel_err(P.data, D.data) < 1e-10);
        }
    }
    const AnalysisBankConfig odd(6, 3, rand_proto(10, 9));
    const auto x = rand_buf(29, 10);
    CHECK(rel_err(afb_polyphase(x, odd).data, afb_direct(x, odd).data) < 1e-10);
}

TEST_CASE("sfb_direct examples") {
    const SynthesisBankConfig c(4, 2, rand_proto(9, 4));
    const auto S = rand_frame(4, 6, 2, 5);
    const auto s = sfb_direct(S, c);
    CHECK(s.size() == synthesis_output_length(6, c));
    CHECK(rel_err(s.samples(), brute_sfb(S.data, c, s.size())) < 1e-12);

    Matrix<cplx> imp(4, 3);
    imp(3, 0) = 1.0;
    const auto y = sfb_direct(SubbandFrame(imp, 2.0, 1.0), c);
    for (std::size_t n = 0; n < c.prototype.size(); ++n)
        CHECK(std::abs(y[n] - c.prototype[n] * wk(static_cast<long long>(3 * n), 4)) < 1e-14);

    CHECK_THROWS_AS(sfb_direct(rand_frame(5, 3, 2, 1), c), DimensionError);
    CHECK_THROWS_AS(sfb_polyphase(rand_frame(5, 3, 2, 1), c), DimensionError);
}

TEST_CASE("sfb_polyphase equals sfb_direct") {
    for (const auto& g : kGeos) {
        const SynthesisBankConfig c(g.K, g.S, default_synthesis_prototype(g.K));
        for (std::uint64_t trial = 0; trial < 3; ++trial) {
            const auto S = rand_frame(g.K, 5 + trial, g.I, 60 + trial);
            CHECK(rel_err(sfb_polyphase(S, c).samples(), sfb_direct(S, c).samples()) < 1e-10);
        }
    }
    const SynthesisBankConfig odd(8, 4, rand_proto(13, 3));
    const auto S = rand_frame(8, 7, 2, 4);
    CHECK(rel_err(sfb_polyphase(S, odd).samples(), sfb_direct(S, odd).samples()) < 1e-10);
}

TEST_CASE("banks are linear") {
    const AnalysisBankConfig a(8, 4, default_analysis_prototype(8));
    const SynthesisBankConfig s(8, 4, default_synthesis_prototype(8));
    const auto x = rand_buf(90, 1), y = rand_buf(90, 2);
    const cplx al(0.5, -1.0), be(2.0, 0.25);
    std::vector<cplx> z(90);
    for (std::size_t i = 0; i < 90; ++i) z[i] = al * x[i] + be * y[i];
    const auto Z = afb_polyphase(ComplexBuf(z, 1.0), a), X = afb_polyphase(x, a), Y = afb_polyphase(y, a);
    Matrix<cplx> lin(Z.K(), Z.T());
    for (std::size_t i = 0; i < lin.raw().size(); ++i) lin.raw()[i] = al * X.data.raw()[i] + be * Y.data.raw()[i];
    CHECK(rel_err(Z.data, lin) < 1e-12);

    SubbandFrame Sz(lin, Z.subband_rate_hz, Z.subband_interval_hz);
    const auto oz = sfb_polyphase(Sz, s), ox = sfb_polyphase(X, s), oy = sfb_polyphase(Y, s);
    std::vector<cplx> ol(oz.size());
    for (std::size_t i = 0; i < ol.size(); ++i) ol[i] = al * ox[i] + be * oy[i];
    CHECK(rel_err(oz.samples(), ol) < 1e-12);
}

TEST_CASE("same-K cascade reconstructs a delayed scaled input") {
    const std::size_t K = 16;
    const AnalysisBankConfig a(K, 8, default_analysis_prototype(K));
    const SynthesisBankConfig s(K, 8, default_synthesis_prototype(K));
    const auto x = rand_buf(4000, 8);
    const auto y = sfb_polyphase(afb_polyphase(x, a), s);
    const double g = cascade_gain(a, s);
    std::vector<cplx> yn(y.samples());
    for (auto& v : yn) v /= g;
    const auto rep = nmse_aligned(ComplexBuf(yn, 1.0), x, static_cast<long>(a.prototype.size() + s.prototype.size()));
    CHECK(rep.lag == static_cast<long>((a.prototype.size() - 1) / 2 + (s.prototype.size() - 1) / 2));
    CHECK(rep.db <= -30.0);
}

TEST_CASE("2x cascade with the default prototype pair reconstructs the high-rate signal") {
    const AnalysisBankConfig a(16, 8, default_analysis_prototype(16));
    const SynthesisBankConfig s(32, 16, design_windowed_sinc(2 * kPi / 32, 253, Window::kaiser(8)));
    const auto pairs = make_training_pairs(Scheme::Qpsk, 2, 8e6, 2, 5);
    const double g = cascade_gain(a, s);
    const SubbandRouter router(16, 32, 0, 0.0, RoutingOptions{});
    const long D = static_cast<long>(cascade_delay(a, s, router));
    CHECK(D == 494);
    for (const auto& p : pairs) {
        const auto y = cascade(p.x_low, a, s);
        CHECK(y.sample_rate_hz() == doctest::Approx(16e6));
        std::vector<cplx> yn(y.samples());
        for (auto& v : yn) v /= g;
        const auto rep = nmse_aligned(ComplexBuf(yn, 16e6), p.x_high, 600);
        CHECK(rep.lag == D);
        CHECK(rep.db <= -30.0);
    }
}

TEST_CASE("cascade gain") {
    const AnalysisBankConfig a1(1, 1, PrototypeFilter({1.0}, kPi, true));
    const SynthesisBankConfig s1(1, 1, PrototypeFilter({1.0}, kPi, true));
    CHECK(cascade_gain(a1, s1) == doctest::Approx(1.0).epsilon(1e-12));

    const AnalysisBankConfig a(16, 8, default_analysis_prototype(16));
    const SynthesisBankConfig s(32, 16, design_windowed_sinc(2 * kPi / 32, 253, Window::kaiser(8)));
    const double g0 = cascade_gain(a, s);
    CHECK(std::isfinite(g0));
    CHECK(g0 > 0.0);
    for (double w : {0.05 * kPi, 0.15 * kPi, 0.4 * kPi, 0.6 * kPi, -0.3 * kPi})
        CHECK(std::abs(cascade_gain(a, s, {}, w) / g0 - 1.0) < 0.01);
    const SynthesisBankConfig s2(32, 16, s.prototype.scaled(2.0));
    CHECK(cascade_gain(a, s2) == doctest::Approx(2.0 * g0).epsilon(1e-9));
}

TEST_CASE("oversampled single-subband path is free of aliases") {
    const std::size_t K = 16, k0 = 3;
    const AnalysisBankConfig a(K, 8, default_analysis_prototype(K));
    const SynthesisBankConfig s(K, 8, default_synthesis_prototype(K));
    const double w0 = 2 * kPi * k0 / K;
    std::vector<cplx> x(4096);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::polar(1.0, w0 * static_cast<double>(n));
    auto X = afb_polyphase(ComplexBuf(x, 1.0), a);
    for (std::size_t k = 0; k < K; ++k)
        if (k != k0)
            for (std::size_t m = 0; m < X.T(); ++m) X.data(k, m) = 0.0;
    const auto y = sfb_polyphase(X, s);
    const std::size_t edge = a.prototype.size() + s.prototype.size();
    CHECK(pfbmux::testing::tone_purity_db(y.samples(), w0, edge, x.size() - edge) <= -35.0);
}

TEST_CASE("time invariance modulo K") {
    const std::size_t K = 8, I = 2;
    const AnalysisBankConfig a(K, K / I, default_analysis_prototype(K));
    const SynthesisBankConfig s(K, K / I, default_synthesis_prototype(K));
    const auto x = rand_buf(77, 21);
    std::vector<cplx> xd(K, cplx{});
    xd.insert(xd.end(), x.samples().begin(), x.samples().end());
    const auto X = afb_polyphase(x, a), Xd = afb_polyphase(ComplexBuf(xd, 1.0), a);
    REQUIRE(Xd.T() == X.T() + I);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t m = 0; m < I; ++m) CHECK(std::abs(Xd.data(k, m)) < 1e-15);
        for (std::size_t m = 0; m < X.T(); ++m) CHECK(std::abs(Xd.data(k, m + I) - X.data(k, m)) < 1e-13);
    }
    const auto y = sfb_polyphase(X, s), yd = sfb_polyphase(Xd, s);
    REQUIRE(yd.size() == y.size() + K);
    for (std::size_t n = 0; n < y.size(); ++n) CHECK(std::abs(yd[n + K] - y[n]) < 1e-12);
}

TEST_CASE("router places centred rows around the shift") {
    const SubbandRouter r(8, 32, -10, 0.0, RoutingOptions{});
    CHECK(r.splits());
    CHECK(r.frame_delay() == 15);
    for (std::size_t k = 0; k < 4; ++k) CHECK(r.destination(k) == (32 + k - 10) % 32);
    for (std::size_t k = 5; k < 8; ++k) CHECK(r.destination(k) == (64 + k - 8 - 10) % 32);
    CHECK(r.destination(4) == (32 - 4 - 10) % 32);
    const auto occ = r.occupied_bins();
    CHECK(occ.size() == 9);
    CHECK(std::find(occ.begin(), occ.end(), std::size_t{4 + 32 - 10}) != occ.end());

    RoutingOptions plain;
    plain.split_nyquist = false;
    const SubbandRouter q(8, 32, 0, 0.0, plain);
    CHECK_FALSE(q.splits());
    CHECK(q.occupied_bins().size() == 8);
    CHECK(q.output_frames(10) == 10);
}

TEST_CASE("router adjoint passes the dot-product test") {
    for (bool split : {true, false}) {
        RoutingOptions o;
        o.split_nyquist = split;
        const SubbandRouter r(8, 32, 6, 494.0, o);
        const std::size_t T = 40;
        Matrix<cplx> X(8, T), G(32, r.output_frames(T));
        const auto vx = rand_cplx(X.raw().size(), 1), vg = rand_cplx(G.raw().size(), 2);
        std::copy(vx.begin(), vx.end(), X.raw().begin());
        std::copy(vg.begin(), vg.end(), G.raw().begin());
        Matrix<cplx> AX(32, r.output_frames(T));
        r.accumulate(X, AX);
        const auto AtG = r.adjoint(G, T);
        cplx lhs{}, rhs{};
        for (std::size_t i = 0; i < AX.raw().size(); ++i) lhs += AX.raw()[i] * std::conj(G.raw()[i]);
        for (std::size_t i = 0; i < X.raw().size(); ++i) rhs += X.raw()[i] * std::conj(AtG.raw()[i]);
        CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));
    }
}

TEST_CASE("hilbert pair taps are antisymmetric with zero even taps") {
    const auto h = SubbandRouter::hilbert_taps(15, 6.0);
    REQUIRE(h.size() == 31);
    for (std::size_t i = 0; i < h.size(); ++i) {
        CHECK(h[i] == doctest::Approx(-h[30 - i]));
        if ((i + 15) % 2 == 0) CHECK(h[i] == 0.0);
    }
}

TEST_CASE("cascade delay formula") {
    for (std::size_t Ka : {8u, 16u}) {
        const AnalysisBankConfig a(Ka, Ka / 2, default_analysis_prototype(Ka));
        const SynthesisBankConfig s(32, 16, design_windowed_sinc(kPi / 16, 253, Window::rect()));
        const SubbandRouter r(Ka, 32, 0, 0.0, RoutingOptions{});
        CHECK(cascade_delay(a, s, r) == 494.0);
    }
}

}
