// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "pfbmux/filterbank.hpp"
#include "pfbmux/numerics.hpp"
#include "pfbmux/waveforms.hpp"

namespace pfbmux {

struct StreamSpec {
    std::string name;
    double sample_rate_hz = 1.0;
    double center_offset_hz = 0.0;
    Scheme scheme = Scheme::Qpsk;
    ComplexBuf payload;
};

struct WidebandSpec {
    double sample_rate_hz = 1.0;
    std::size_t K_syn = 1;
    std::size_t I = 1;

    WidebandSpec() = default;
    /// Throws ConfigError unless K_syn is a positive multiple of I.
    WidebandSpec(double sample_rate_hz, std::size_t K_syn, std::size_t I);
    std::size_t L() const { return K_syn / I; }
    double subband_interval_hz() const { return sample_rate_hz / static_cast<double>(K_syn); }
};

struct StreamPlan {
    std::string name;
    double sample_rate_hz = 1.0;
    std::size_t K_ana = 1;
    std::size_t M_ana = 1;
    std::size_t ratio = 1;
    long shift = 0;
    /// bin_map[k] = (k~ + shift) mod K_syn, k~ the centered index of row k.
    std::vector<std::size_t> bin_map;
    /// All synthesis bins receiving energy from this stream.
    std::vector<std::size_t> bins;
};

struct MuxPlan {
    WidebandSpec wideband;
    RoutingOptions routing;
    bool allow_overlap = false;
    std::vector<StreamPlan> streams;
};

struct PlanOptions {
    RoutingOptions routing;
    bool allow_overlap = false;
};

/// Throws PlanError for streams that do not fit, rates that do not divide,
/// offsets off the subband grid, or bin collisions.
MuxPlan plan_mux(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, const PlanOptions& opt = {});

struct NnpfbBanks {
    /// Analysis prototype per K_ana.
    std::map<std::size_t, PrototypeFilter> analysis;
    PrototypeFilter synthesis;
};

/// Default Kaiser analysis prototypes for every K_ana in the plan plus the given synthesis filter.
NnpfbBanks make_nnpfb_banks(const MuxPlan& plan, const PrototypeFilter& synthesis);

/// All multiplexers return output aligned to the inputs: sample n of the
/// result corresponds to input time n / ratio, length max(len * ratio).
ComplexBuf mux_nnpfb(const std::vector<StreamSpec>& streams, const MuxPlan& plan, const NnpfbBanks& banks,
                     const WidebandSpec& wb);

/// Output delay removed by mux_nnpfb, in wideband samples.
long nnpfb_delay(const MuxPlan& plan, const NnpfbBanks& banks);

struct DirectOptions {
    /// 0 selects 32 * ratio + 1.
    std::size_t num_taps = 0;
    double kaiser_beta = 8.0;
    /// 0 selects pi / ratio.
    double cutoff_norm = 0.0;
};

ComplexBuf mux_direct(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, const DirectOptions& opt = {});

struct DftMuxLayout {
    double resolution_hz = 0.0;
    std::size_t idft_size = 0;
    std::vector<std::size_t> dft_sizes;
    std::vector<long> shifts;
    std::size_t occupied_bins = 0;
};

DftMuxLayout plan_dft_mux(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, std::size_t dft_block);
ComplexBuf mux_dft(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, std::size_t dft_block = 8);

struct DemuxOptions {
    std::size_t num_taps = 255;
    double kaiser_beta = 8.0;
};

/// Shift by -offset, low-pass at pi / ratio, decimate. Output length
/// floor(len / ratio) at the stream rate, delay compensated.
ComplexBuf demux_reference(const ComplexBuf& wideband, const StreamSpec& spec, const WidebandSpec& wb,
                           const DemuxOptions& opt = {});

/// e^{j 2 pi f n / fs}, with the phase reduced exactly for rational f/fs.
std::vector<cplx> mixer(std::size_t n, double f_hz, double fs_hz);

}  // namespace pfbmux
