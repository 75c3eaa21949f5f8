// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

namespace pfbmux::testing {

std::vector<cplx> rand_cplx(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<cplx> v(n);
    for (auto& s : v) {
        const double re = nd(rng);
        const double im = nd(rng);
        s = {re, im};
    }
    return v;
}

std::vector<double> rand_real(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n);
    for (auto& s : v) s = nd(rng);
    return v;
}

ComplexBuf rand_buf(std::size_t n, std::uint64_t seed, double rate) { return ComplexBuf(rand_cplx(n, seed), rate); }

double max_abs(std::span<const cplx> a) {
    double m = 0.0;
    for (const auto& v : a) m = std::max(m, std::abs(v));
    return m;
}

double rel_err(std::span<const cplx> a, std::span<const cplx> b) {
    const std::size_t n = std::min(a.size(), b.size());
    double num = 0.0;
    for (std::size_t i = 0; i < n; ++i) num = std::max(num, std::abs(a[i] - b[i]));
    const double den = max_abs(b.subspan(0, n));
    return den > 0.0 ? num / den : num;
}

double rel_err(const Matrix<cplx>& a, const Matrix<cplx>& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    return rel_err(std::span<const cplx>(a.raw()), std::span<const cplx>(b.raw()));
}

LearnableSynthesisFilter sinc_init_253() { return init_model_driven(32, 16, 2.0 * kPi / 32.0, 253); }

CascadeModel model_4x(const LearnableSynthesisFilter& syn) {
    AnalysisBankConfig a(8, 4, default_analysis_prototype(8));
    return make_cascade_model(a, {32, 16}, syn);
}

CascadeModel model_2x(const LearnableSynthesisFilter& syn) {
    AnalysisBankConfig a(16, 8, default_analysis_prototype(16));
    return make_cascade_model(a, {32, 16}, syn);
}

const LearnableSynthesisFilter& quick_trained_4x() {
    static const LearnableSynthesisFilter f = [] {
        const auto pairs = make_training_mixture({12, 6, 6}, 4e6, 4, 101);
        TrainConfig tc;
        tc.epochs = 120;
        tc.optimizer.lr = 1e-3;
        return train(pairs, tc, model_4x(sinc_init_253())).synthesis;
    }();
    return f;
}

WidebandSpec wideband_16() { return WidebandSpec(16e6, 32, 2); }

std::vector<StreamSpec> three_zigbee(std::size_t n_bits, std::uint64_t seed) {
    std::vector<StreamSpec> s;
    const double offs[3] = {-5e6, 0.0, 5e6};
    for (int i = 0; i < 3; ++i)
        s.push_back({"z" + std::to_string(i), 4e6, offs[i], Scheme::ZigbeeOqpsk,
                     gen_zigbee_oqpsk(n_bits, 2, seed + static_cast<std::uint64_t>(i), 4e6)});
    return s;
}

double tone_purity_db(std::span<const cplx> x, double omega, std::size_t lo, std::size_t hi) {
    cplx c{};
    double total = 0.0;
    for (std::size_t n = lo; n < hi; ++n) {
        c += x[n] * std::polar(1.0, -omega * static_cast<double>(n));
        total += std::norm(x[n]);
    }
    const double len = static_cast<double>(hi - lo);
    c /= len;
    double resid = 0.0;
    for (std::size_t n = lo; n < hi; ++n) resid += std::norm(x[n] - c * std::polar(1.0, omega * static_cast<double>(n)));
    return 10.0 * std::log10(resid / total);
}

std::string temp_path(const std::string& name) {
#ifdef PFBMUX_TEST_TMP
    const std::filesystem::path dir = PFBMUX_TEST_TMP;
#else
    const std::filesystem::path dir = std::filesystem::temp_directory_path() / "pfbmux_tests";
#endif
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace pfbmux::testing
