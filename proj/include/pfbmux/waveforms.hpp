// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pfbmux/numerics.hpp"

namespace pfbmux {

enum class Scheme { Qpsk, ZigbeeOqpsk, Gmsk };

std::string scheme_name(Scheme s);
/// Accepts "qpsk", "zigbee"/"zigbee_oqpsk"/"oqpsk", "gmsk"/"ble".
Scheme parse_scheme(const std::string& name);

struct SymbolStream {
    std::vector<cplx> symbols;
    Scheme scheme = Scheme::Qpsk;
    std::uint64_t seed = 0;
};

inline constexpr std::size_t kRrcSpan = 8;
inline constexpr double kZigbeeChipRate = 2e6;
inline constexpr double kBleBitRate = 1e6;

std::vector<cplx> random_qpsk_symbols(std::size_t n, std::uint64_t seed);
std::vector<std::uint8_t> random_bits(std::size_t n, std::uint64_t seed);

/// Continuous-time root-raised-cosine pulse with unit energy per symbol
/// period, t in symbol periods.
double rrc_pulse(double t, double rolloff);
/// Discrete RRC spanning `span` symbols, normalized to unit energy.
std::vector<double> rrc_taps(std::size_t sps, double rolloff, std::size_t span = kRrcSpan);

/// Symbol s peaks at sample (s + span/2) * sps. Length (n - 1 + span) sps + 1.
ComplexBuf render_qpsk(std::span<const cplx> symbols, std::size_t sps, double rolloff, double rate_hz);
std::pair<SymbolStream, ComplexBuf> gen_qpsk(std::size_t n_symbols, std::size_t sps, double rolloff,
                                             std::uint64_t seed, double rate_hz = 1.0);

/// 802.15.4 2.4 GHz chip sequence of a 4-bit symbol, chips in {0,1}.
const std::array<std::uint8_t, 32>& zigbee_chips(unsigned symbol);
/// 4-bit symbols from bits, least significant bit first.
std::vector<std::uint8_t> bits_to_zigbee_symbols(std::span<const std::uint8_t> bits);
/// sps counts samples per chip; chip j peaks at sample (j + 1) * sps.
ComplexBuf render_oqpsk(std::span<const std::uint8_t> symbols, std::size_t sps, double rate_hz);
ComplexBuf gen_zigbee_oqpsk(std::size_t n_bits, std::size_t sps, std::uint64_t seed, double rate_hz = 1.0);
/// Hard chip decisions at the pulse peaks, then best-matching chip sequence.
std::vector<std::uint8_t> demod_oqpsk(const ComplexBuf& rx, std::size_t sps, std::size_t n_symbols);

/// Gaussian MSK, modulation index 0.5. sps counts samples per bit.
ComplexBuf render_gmsk(std::span<const std::uint8_t> bits, std::size_t sps, double bt, double rate_hz);
ComplexBuf gen_gmsk(std::size_t n_bits, std::size_t sps, double bt, std::uint64_t seed, double rate_hz = 1.0);

/// Circular Gaussian samples with the given mean power.
std::vector<cplx> complex_gaussian(std::size_t n, double power, std::uint64_t seed);
/// Adds noise at signal power / 10^(snr/10). +inf returns x unchanged.
ComplexBuf awgn(const ComplexBuf& x, double snr_db, std::uint64_t seed);

/// Matched filter, timing by correlation peak within +-2 symbols of
/// coarse_delay, hard decisions. Throws MetricError if no clear peak exists.
double qpsk_ber(const ComplexBuf& rx, const SymbolStream& tx, std::size_t sps, double rolloff, long coarse_delay = 0);

/// SNR where a BER curve (ascending snr_db) first drops to target, by
/// interpolation in log10(BER); linear in BER when the next point is 0.
/// +inf if it never does, the first SNR if it starts below target.
double snr_at_ber(std::span<const double> snr_db, std::span<const double> ber, double target);

}  // namespace pfbmux
