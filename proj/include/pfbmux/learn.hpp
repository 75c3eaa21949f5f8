// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pfbmux/filterbank.hpp"
#include "pfbmux/numerics.hpp"
#include "pfbmux/waveforms.hpp"

namespace pfbmux {

/// Linear-phase FIR of odd length N+1 parameterized by its first N/2+1 taps.
class LearnableSynthesisFilter {
public:
    LearnableSynthesisFilter() = default;
    LearnableSynthesisFilter(std::vector<double> half_taps, std::size_t total_len, double cutoff_norm);

    const std::vector<double>& half_taps() const { return half_; }
    std::vector<double>& half_taps() { return half_; }
    std::size_t total_len() const { return total_len_; }
    std::size_t parameter_count() const { return half_.size(); }
    double cutoff_norm() const { return cutoff_; }

    PrototypeFilter materialize() const;
    /// Gradient over full taps -> gradient over half taps.
    std::vector<double> tie(const std::vector<double>& full_grad) const;

private:
    std::vector<double> half_{1.0};
    std::size_t total_len_ = 1;
    double cutoff_ = kPi;
};

/// Truncated sinc at cutoff_norm (rectangular window unless given).
LearnableSynthesisFilter init_model_driven(std::size_t K, std::size_t L, double cutoff_norm, std::size_t total_len,
                                           Window window = Window::rect());
/// half taps ~ N(0, 1/total_len).
LearnableSynthesisFilter init_random_normal(std::size_t total_len, std::uint64_t seed, double cutoff_norm = kPi);
PolyphaseSet branch_kernels(const LearnableSynthesisFilter& f, std::size_t K, std::size_t L);

/// Synthesis bank geometry without its prototype.
struct SynthesisShape {
    std::size_t K = 1;
    std::size_t L = 1;
};

struct TrainingPair {
    ComplexBuf x_low;
    ComplexBuf x_high;
    Scheme scheme = Scheme::Qpsk;
};

/// AFB -> identity routing -> SFB with a trainable synthesis prototype.
struct CascadeModel {
    AnalysisBankConfig analysis;
    SynthesisShape shape;
    RoutingOptions routing;
    LearnableSynthesisFilter synthesis;

    std::size_t ratio() const { return shape.K / analysis.K; }
    /// Fixed output gain L applied by forward.
    double gain() const { return static_cast<double>(shape.L); }
    /// Integer cascade delay in output samples.
    long lag() const;
    SubbandRouter router() const;
    SynthesisBankConfig synthesis_config() const;
};

/// Validates geometry (K_ana | K_syn, equal I, odd symmetric prototypes).
CascadeModel make_cascade_model(AnalysisBankConfig acfg, SynthesisShape shape, LearnableSynthesisFilter syn,
                                RoutingOptions routing = {});

/// L * sfb_polyphase(route(afb_polyphase(x_low))), untrimmed.
ComplexBuf forward(const ComplexBuf& x_low, const CascadeModel& model);
ComplexBuf forward(const ComplexBuf& x_low, const AnalysisBankConfig& acfg, const LearnableSynthesisFilter& syn,
                   SynthesisShape shape, const RoutingOptions& routing = {});

/// Mean |x_hat(l + lag) - x(l)|^2 over the overlap of both supports.
double loss_mse(const ComplexBuf& x_hat, const ComplexBuf& x_high, long lag);

/// Per-pair precomputation: branch inputs S_hat of the routed analysis frame.
/// The output is linear in the synthesis taps, so loss and gradient only need
/// S_hat and the target.
class PairCache {
public:
    PairCache(const TrainingPair& pair, const CascadeModel& model);

    /// Cascade output on the loss window, for arbitrary full synthesis taps.
    std::vector<cplx> window_output(std::span<const double> f) const;
    double loss(std::span<const double> f) const;
    /// d loss / d f(t) over full taps.
    std::vector<double> grad_full(std::span<const double> f) const;
    /// d loss / d h(i) over full analysis taps (joint training).
    std::vector<double> grad_analysis_full(std::span<const double> f) const;

    std::size_t window() const { return n_; }

    std::vector<cplx> residual(std::span<const double> f) const;

private:
    std::vector<cplx> x_low_;
    std::vector<cplx> target_;
    AnalysisBankConfig analysis_;
    SubbandRouter router_;
    std::size_t Ks_ = 1, L_ = 1;
    double gain_ = 1.0;
    Matrix<cplx> shat_;
    std::size_t T_ = 0;
    long lag_ = 0;
    std::size_t n_ = 0;
};

std::vector<double> grad_analytic(const TrainingPair& pair, const CascadeModel& model);

struct JointGradient {
    std::vector<double> synthesis;
    std::vector<double> analysis;
};
/// Gradient over synthesis and analysis half taps.
JointGradient grad_analytic_joint(const TrainingPair& pair, const CascadeModel& model);

struct OptimizerConfig {
    /// LineSearch takes the exact minimizing step along -grad; test use only.
    enum class Kind { Sgd, Adam, LineSearch };
    Kind kind = Kind::Adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    int epochs = 200;
    OptimizerConfig optimizer;
    /// 0 means full batch.
    std::size_t batch = 0;
    std::uint64_t seed = 0;
    bool train_analysis = false;
};

struct TrainResult {
    LearnableSynthesisFilter synthesis;
    std::optional<LearnableSynthesisFilter> analysis;
    std::vector<double> loss_curve;
    double final_loss = 0.0;
};

/// Throws ConfigError on bad config, TrainingError on a non-finite loss.
TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg, const CascadeModel& init);

/// Mean cascade loss over pairs for a model.
double mean_loss(const std::vector<TrainingPair>& pairs, const CascadeModel& model);
/// NMSE of the forward output against x_high at the analytic lag.
double pair_nmse_db(const TrainingPair& pair, const CascadeModel& model);

struct PairOptions {
    std::size_t n_symbols = 256;
    std::size_t qpsk_sps = 4;
    double qpsk_rolloff = 0.35;
    double gmsk_bt = 0.5;
};

struct PairMixture {
    std::size_t qpsk = 90;
    std::size_t zigbee = 45;
    std::size_t gmsk = 45;
};

/// Same random content at f_s and r*f_s. ZigBee uses 2 Mchip/s and GMSK
/// 1 Mbit/s, so f_s must be a multiple of those rates.
std::vector<TrainingPair> make_training_pairs(Scheme scheme, std::size_t count, double f_s, std::size_t r,
                                              std::uint64_t seed, const PairOptions& opt = {});
std::vector<TrainingPair> make_training_mixture(const PairMixture& mix, double f_s, std::size_t r, std::uint64_t seed,
                                                const PairOptions& opt = {});

}  // namespace pfbmux
