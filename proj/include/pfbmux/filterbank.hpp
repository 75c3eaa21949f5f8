// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "pfbmux/multirate.hpp"
#include "pfbmux/numerics.hpp"
#include "pfbmux/types.hpp"

namespace pfbmux {

struct AnalysisBankConfig {
    std::size_t K = 1;
    std::size_t M = 1;
    std::size_t I = 1;
    PrototypeFilter prototype;

    AnalysisBankConfig() = default;
    /// Throws ConfigError unless K == M * I.
    AnalysisBankConfig(std::size_t K, std::size_t M, PrototypeFilter h);
};

struct SynthesisBankConfig {
    std::size_t K = 1;
    std::size_t L = 1;
    std::size_t I = 1;
    PrototypeFilter prototype;

    SynthesisBankConfig() = default;
    SynthesisBankConfig(std::size_t K, std::size_t L, PrototypeFilter f);
};

/// 8K+1 taps, Kaiser(8), cutoff pi/K.
PrototypeFilter default_analysis_prototype(std::size_t K);
/// 8K+1 taps, Kaiser(8), cutoff 2pi/K.
PrototypeFilter default_synthesis_prototype(std::size_t K);

/// K x T subband samples; row k is subband k, column m is time.
struct SubbandFrame {
    Matrix<cplx> data;
    double subband_rate_hz = 1.0;
    double subband_interval_hz = 1.0;

    SubbandFrame() = default;
    /// Throws ConfigError unless rate / interval is a positive integer.
    SubbandFrame(Matrix<cplx> data, double subband_rate_hz, double subband_interval_hz);

    std::size_t K() const { return data.rows(); }
    std::size_t T() const { return data.cols(); }
};

/// Frame length of both analysis forms: (R-1) I + P with R = ceil(N/K) and
/// P the analysis branch length; 0 for empty input.
std::size_t analysis_frame_length(std::size_t n_in, const AnalysisBankConfig& cfg);
/// (T-1) L + len(f); 0 for an empty frame.
std::size_t synthesis_output_length(std::size_t T, const SynthesisBankConfig& cfg);

SubbandFrame afb_direct(const ComplexBuf& x, const AnalysisBankConfig& cfg);
SubbandFrame afb_polyphase(const ComplexBuf& x, const AnalysisBankConfig& cfg);
ComplexBuf sfb_direct(const SubbandFrame& S, const SynthesisBankConfig& cfg);
ComplexBuf sfb_polyphase(const SubbandFrame& S, const SynthesisBankConfig& cfg);

/// Unnormalized IDFT pattern across bins: out(rho, m) = sum_k S(k, m) W_K^{k rho}.
Matrix<cplx> synthesis_branch_inputs(const Matrix<cplx>& S, const DftMatrix& W);

struct RoutingOptions {
    /// Split the Nyquist row of even-K streams into its two band-edge halves.
    bool split_nyquist = true;
    std::size_t hilbert_half_len = 15;
    double hilbert_beta = 6.0;
};

/// Places the rows of one stream's analysis frame into synthesis bins.
/// Row k goes to bin (k~ + shift) mod K_syn with k~ = k or k - K_ana (centered).
/// Each routed row is multiplied by W_Ksyn^{-k' D}, D the cascade delay in
/// output samples, so that all bins add coherently after the delay is removed.
/// With split_nyquist, row K_ana/2 is split by a Hilbert pair into the halves
/// belonging to bins -K_ana/2 and +K_ana/2; every other row is delayed by the
/// Hilbert half length J to match.
class SubbandRouter {
public:
    SubbandRouter() = default;
    SubbandRouter(std::size_t K_ana, std::size_t K_syn, long shift, double delay, const RoutingOptions& opt);

    bool splits() const { return split_; }
    /// Extra subband samples of delay introduced by routing.
    std::size_t frame_delay() const { return split_ ? J_ : 0; }
    std::size_t output_frames(std::size_t T) const { return T + 2 * frame_delay(); }
    long shift() const { return shift_; }

    /// out(k', t + pad) += scale * routed(X); out must have output_frames(T)+pad columns.
    void accumulate(const Matrix<cplx>& X, Matrix<cplx>& out, cplx scale = 1.0, std::size_t pad = 0) const;
    /// Adjoint of accumulate (scale 1, pad 0): g_in(k, t) from g_out.
    Matrix<cplx> adjoint(const Matrix<cplx>& g_out, std::size_t T) const;

    /// Synthesis bins receiving energy, ascending and unique.
    std::vector<std::size_t> occupied_bins() const;
    /// Destination of row k (for the split row, the negative-edge half).
    std::size_t destination(std::size_t k) const;

    static std::vector<double> hilbert_taps(std::size_t J, double beta);

private:
    std::size_t Ka_ = 1, Ks_ = 1;
    long shift_ = 0;
    bool split_ = false;
    std::size_t J_ = 0;
    std::vector<cplx> phase_;  // per destination bin
    std::vector<double> hilb_;
};

/// Cascade delay in output samples: c_h * (K_syn/K_ana) + J*L + c_f.
double cascade_delay(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg, const SubbandRouter& router);

/// Raw AFB -> route (shift 0) -> SFB; output at K_syn/K_ana times the input rate.
ComplexBuf cascade(const ComplexBuf& x, const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg,
                   const RoutingOptions& opt = {});

/// Passband gain |y|/|x| of the cascade for a tone at input-rate frequency
/// probe_omega, measured in steady state.
double cascade_gain(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg, const RoutingOptions& opt = {},
                    double probe_omega = kPi / 4.0);

}  // namespace pfbmux
