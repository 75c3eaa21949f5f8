// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/waveforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pfbmux/errors.hpp"

namespace pfbmux {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Qpsk: return "qpsk";
        case Scheme::ZigbeeOqpsk: return "zigbee_oqpsk";
        case Scheme::Gmsk: return "gmsk";
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "qpsk") return Scheme::Qpsk;
    if (name == "zigbee" || name == "zigbee_oqpsk" || name == "oqpsk") return Scheme::ZigbeeOqpsk;
    if (name == "gmsk" || name == "ble") return Scheme::Gmsk;
    throw ConfigError("unsupported scheme '" + name + "'");
}

std::vector<cplx> random_qpsk_symbols(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double a = 1.0 / std::sqrt(2.0);
    std::vector<cplx> s(n);
    for (auto& v : s) {
        std::uint64_t b = rng();
        v = {(b & 1) ? a : -a, (b & 2) ? a : -a};
    }
    return s;
}

std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::uint8_t> b(n);
    for (auto& v : b) v = static_cast<std::uint8_t>(rng() >> 63);
    return b;
}

double rrc_pulse(double t, double a) {
    if (std::abs(t) < 1e-12) return 1.0 - a + 4.0 * a / kPi;
    if (std::abs(std::abs(4.0 * a * t) - 1.0) < 1e-10)
        return a / std::sqrt(2.0) *
               ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * a)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * a)));
    const double x = 4.0 * a * t;
    return (std::sin(kPi * t * (1.0 - a)) + x * std::cos(kPi * t * (1.0 + a))) / (kPi * t * (1.0 - x * x));
}

std::vector<double> rrc_taps(std::size_t sps, double rolloff, std::size_t span) {
    const std::size_t n = span * sps + 1;
    std::vector<double> g(n);
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = rrc_pulse(static_cast<double>(i) / static_cast<double>(sps) - static_cast<double>(span) / 2.0, rolloff);
        e += g[i] * g[i];
    }
    for (auto& v : g) v /= std::sqrt(e);
    return g;
}

ComplexBuf render_qpsk(std::span<const cplx> symbols, std::size_t sps, double rolloff, double rate_hz) {
    if (sps < 2) throw ConfigError("qpsk: sps must be >= 2");
    if (!(rolloff > 0.0 && rolloff <= 1.0)) throw ConfigError("qpsk: rolloff must lie in (0, 1]");
    if (symbols.empty()) return ComplexBuf({}, rate_hz);
    const std::size_t n = (symbols.size() - 1 + kRrcSpan) * sps + 1;
    std::vector<double> p(kRrcSpan * sps + 1);
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = rrc_pulse(static_cast<double>(i) / static_cast<double>(sps) - static_cast<double>(kRrcSpan) / 2.0, rolloff);
    std::vector<cplx> x(n);
    for (std::size_t s = 0; s < symbols.size(); ++s)
        for (std::size_t i = 0; i < p.size(); ++i) x[s * sps + i] += symbols[s] * p[i];
    return ComplexBuf(std::move(x), rate_hz);
}

std::pair<SymbolStream, ComplexBuf> gen_qpsk(std::size_t n_symbols, std::size_t sps, double rolloff,
                                             std::uint64_t seed, double rate_hz) {
    SymbolStream ss{random_qpsk_symbols(n_symbols, seed), Scheme::Qpsk, seed};
    ComplexBuf x = render_qpsk(ss.symbols, sps, rolloff, rate_hz);
    return {std::move(ss), std::move(x)};
}

namespace {

std::array<std::array<std::uint8_t, 32>, 16> build_chip_table() {
    const char* base = "11011001110000110101001000101110";
    std::array<std::array<std::uint8_t, 32>, 16> t{};
    for (unsigned s = 0; s < 8; ++s)
        for (unsigned j = 0; j < 32; ++j) t[s][(j + 4 * s) % 32] = static_cast<std::uint8_t>(base[j] - '0');
    for (unsigned s = 0; s < 8; ++s)
        for (unsigned j = 0; j < 32; ++j) t[s + 8][j] = static_cast<std::uint8_t>(j % 2 ? t[s][j] ^ 1 : t[s][j]);
    return t;
}

}  // namespace

const std::array<std::uint8_t, 32>& zigbee_chips(unsigned symbol) {
    static const auto table = build_chip_table();
    return table.at(symbol & 15u);
}

std::vector<std::uint8_t> bits_to_zigbee_symbols(std::span<const std::uint8_t> bits) {
    if (bits.size() % 4 != 0) throw ConfigError("zigbee: n_bits must be a multiple of 4");
    std::vector<std::uint8_t> s(bits.size() / 4);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (unsigned b = 0; b < 4; ++b) s[i] = static_cast<std::uint8_t>(s[i] | ((bits[4 * i + b] & 1u) << b));
    return s;
}

ComplexBuf render_oqpsk(std::span<const std::uint8_t> symbols, std::size_t sps, double rate_hz) {
    if (sps < 1) throw ConfigError("zigbee: sps must be >= 1");
    if (symbols.empty()) return ComplexBuf({}, rate_hz);
    const std::size_t nc = 32 * symbols.size();
    const std::size_t n = (nc + 1) * sps + 1;
    std::vector<double> pulse(2 * sps);
    for (std::size_t i = 0; i < pulse.size(); ++i) pulse[i] = std::sin(kPi * static_cast<double>(i) / (2.0 * static_cast<double>(sps)));
    std::vector<cplx> x(n);
    for (std::size_t j = 0; j < nc; ++j) {
        const double c = zigbee_chips(symbols[j / 32])[j % 32] ? 1.0 : -1.0;
        const cplx u = (j % 2 == 0) ? cplx(c, 0.0) : cplx(0.0, c);
        for (std::size_t i = 0; i < pulse.size(); ++i) x[j * sps + i] += u * pulse[i];
    }
    return ComplexBuf(std::move(x), rate_hz);
}

ComplexBuf gen_zigbee_oqpsk(std::size_t n_bits, std::size_t sps, std::uint64_t seed, double rate_hz) {
    if (n_bits % 4 != 0) throw ConfigError("zigbee: n_bits must be a multiple of 4");
    auto bits = random_bits(n_bits, seed);
    return render_oqpsk(bits_to_zigbee_symbols(bits), sps, rate_hz);
}

std::vector<std::uint8_t> demod_oqpsk(const ComplexBuf& rx, std::size_t sps, std::size_t n_symbols) {
    std::vector<std::uint8_t> out(n_symbols);
    for (std::size_t s = 0; s < n_symbols; ++s) {
        int best = -1;
        int best_score = std::numeric_limits<int>::min();
        for (unsigned cand = 0; cand < 16; ++cand) {
            const auto& chips = zigbee_chips(cand);
            int score = 0;
            for (std::size_t j = 0; j < 32; ++j) {
                const std::size_t g = 32 * s + j;
                const std::size_t idx = (g + 1) * sps;
                double v = 0.0;
                if (idx < rx.size()) v = (g % 2 == 0) ? rx[idx].real() : rx[idx].imag();
                int hard = v >= 0.0 ? 1 : 0;
                score += hard == chips[j] ? 1 : -1;
            }
            if (score > best_score) {
                best_score = score;
                best = static_cast<int>(cand);
            }
        }
        out[s] = static_cast<std::uint8_t>(best);
    }
    return out;
}

namespace {

double gauss_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }
double gauss_pdf(double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi); }
double psi(double u) { return u * gauss_cdf(u) + gauss_pdf(u); }

}  // namespace

ComplexBuf render_gmsk(std::span<const std::uint8_t> bits, std::size_t sps, double bt, double rate_hz) {
    if (!(bt > 0.0 && bt <= 1.0)) throw ConfigError("gmsk: bt must lie in (0, 1]");
    if (sps < 1) throw ConfigError("gmsk: sps must be >= 1");
    if (bits.empty()) return ComplexBuf({}, rate_hz);
    constexpr double h = 0.5;
    constexpr long half_span = 4;
    const double c = 2.0 * kPi * bt / std::sqrt(std::log(2.0));
    auto q = [c](double t) { return (psi(c * (t + 0.5)) - psi(c * (t - 0.5))) / (2.0 * c); };

    const long nb = static_cast<long>(bits.size());
    const std::size_t n = static_cast<std::size_t>((nb - 1 + 2 * half_span)) * sps + 1;
    std::vector<double> prefix(bits.size() + 1, 0.0);
    for (std::size_t i = 0; i < bits.size(); ++i) prefix[i + 1] = prefix[i] + (bits[i] ? 1.0 : -1.0);
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(sps) - static_cast<double>(half_span);
        // bits with t - k > half_span are fully integrated (q = 1/2)
        long k_full = static_cast<long>(std::ceil(t - static_cast<double>(half_span))) - 1;
        k_full = std::clamp(k_full, -1L, nb - 1);
        double ph = 0.5 * prefix[static_cast<std::size_t>(k_full + 1)];
        const long k_hi = std::min(nb - 1, static_cast<long>(std::floor(t + static_cast<double>(half_span))));
        for (long k = k_full + 1; k <= k_hi; ++k) ph += (bits[static_cast<std::size_t>(k)] ? 1.0 : -1.0) * q(t - static_cast<double>(k));
        const double a = 2.0 * kPi * h * ph;
        x[i] = {std::cos(a), std::sin(a)};
    }
    return ComplexBuf(std::move(x), rate_hz);
}

ComplexBuf gen_gmsk(std::size_t n_bits, std::size_t sps, double bt, std::uint64_t seed, double rate_hz) {
    auto bits = random_bits(n_bits, seed);
    return render_gmsk(bits, sps, bt, rate_hz);
}

std::vector<cplx> complex_gaussian(std::size_t n, double power, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, std::sqrt(power / 2.0));
    std::vector<cplx> v(n);
    for (auto& s : v) {
        double re = nd(rng);
        double im = nd(rng);
        s = {re, im};
    }
    return v;
}

ComplexBuf awgn(const ComplexBuf& x, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db)) throw ConfigError("awgn: snr must be a number");
    if (std::isinf(snr_db) && snr_db > 0) return x;
    const double p = x.mean_power();
    if (!(p > 0.0)) throw MetricError("awgn: signal has zero power");
    auto noise = complex_gaussian(x.size(), p / std::pow(10.0, snr_db / 10.0), seed);
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] += x[i];
    return ComplexBuf(std::move(noise), x.sample_rate_hz());
}

double qpsk_ber(const ComplexBuf& rx, const SymbolStream& tx, std::size_t sps, double rolloff, long coarse_delay) {
    const auto& a = tx.symbols;
    if (a.empty()) throw MetricError("qpsk_ber: no transmitted symbols");
    const auto g = rrc_taps(sps, rolloff);
    const long ng = static_cast<long>(g.size());
    const long nr = static_cast<long>(rx.size());
    const long s_sps = static_cast<long>(sps);
    auto mf = [&](long idx) {  // full convolution output at idx
        cplx acc{};
        const long lo = std::max(0L, idx - ng + 1);
        const long hi = std::min(nr - 1, idx);
        for (long n = lo; n <= hi; ++n) acc += g[static_cast<std::size_t>(idx - n)] * rx[static_cast<std::size_t>(n)];
        return acc;
    };
    const long nominal = static_cast<long>(kRrcSpan) * s_sps + coarse_delay;
    const long search = 2 * s_sps;
    double best = -1.0;
    long best_d = 0;
    double best_energy = 0.0;
    for (long d = -search; d <= search; ++d) {
        cplx c{};
        double e = 0.0;
        for (std::size_t s = 0; s < a.size(); ++s) {
            cplx z = mf(nominal + d + static_cast<long>(s) * s_sps);
            c += z * std::conj(a[s]);
            e += std::norm(z);
        }
        if (std::abs(c) > best) {
            best = std::abs(c);
            best_d = d;
            best_energy = e;
        }
    }
    const double rho = best_energy > 0.0 ? best / std::sqrt(best_energy * static_cast<double>(a.size())) : 0.0;
    if (rho < 0.1) throw MetricError("qpsk_ber: timing recovery failed (no correlation peak)");
    std::size_t errors = 0;
    for (std::size_t s = 0; s < a.size(); ++s) {
        cplx z = mf(nominal + best_d + static_cast<long>(s) * s_sps);
        if ((z.real() >= 0.0) != (a[s].real() >= 0.0)) ++errors;
        if ((z.imag() >= 0.0) != (a[s].imag() >= 0.0)) ++errors;
    }
    return static_cast<double>(errors) / static_cast<double>(2 * a.size());
}

double snr_at_ber(std::span<const double> snr_db, std::span<const double> ber, double target) {
    if (snr_db.size() != ber.size()) throw DimensionError("snr_at_ber: length mismatch");
    if (snr_db.empty()) return std::numeric_limits<double>::infinity();
    if (ber[0] <= target) return snr_db[0];
    for (std::size_t i = 1; i < ber.size(); ++i) {
        if (ber[i] > target) continue;
        const double s0 = snr_db[i - 1], s1 = snr_db[i];
        if (!std::isfinite(s1)) return std::numeric_limits<double>::infinity();
        double t;
        if (ber[i] <= 0.0)
            t = (ber[i - 1] - target) / ber[i - 1];
        else
            t = (std::log10(ber[i - 1]) - std::log10(target)) / (std::log10(ber[i - 1]) - std::log10(ber[i]));
        return s0 + t * (s1 - s0);
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace pfbmux
