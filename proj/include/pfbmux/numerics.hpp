// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "pfbmux/types.hpp"

namespace pfbmux {

inline constexpr double kPi = 3.14159265358979323846;

/// Complex baseband samples tagged with their sample rate. Samples are kept in
/// double precision; cf32 conversion happens at file boundaries only.
class ComplexBuf {
public:
    ComplexBuf() = default;
    ComplexBuf(std::vector<cplx> samples, double sample_rate_hz);

    const std::vector<cplx>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    double sample_rate_hz() const { return rate_; }
    const cplx& operator[](std::size_t i) const { return samples_[i]; }

    double energy() const;
    double mean_power() const;

private:
    std::vector<cplx> samples_;
    double rate_ = 1.0;
};

/// Real FIR prototype (h or f).
class PrototypeFilter {
public:
    PrototypeFilter() = default;
    /// Throws ConfigError when taps are empty/non-finite, cutoff is outside
    /// (0, pi], or symmetric is claimed but the taps are not mirrored.
    PrototypeFilter(std::vector<double> taps, double cutoff_norm, bool symmetric);

    /// Rejects any tap with a nonzero imaginary part.
    static PrototypeFilter from_complex(std::span<const cplx> taps, double cutoff_norm, bool symmetric);

    const std::vector<double>& taps() const { return taps_; }
    std::size_t size() const { return taps_.size(); }
    double operator[](std::size_t i) const { return taps_[i]; }
    double cutoff_norm() const { return cutoff_; }
    bool symmetric() const { return symmetric_; }
    /// (N-1)/2: the linear-phase group delay in samples.
    double group_delay() const { return (static_cast<double>(taps_.size()) - 1.0) / 2.0; }

    PrototypeFilter scaled(double g) const;

private:
    std::vector<double> taps_{1.0};
    double cutoff_ = kPi;
    bool symmetric_ = true;
};

struct Spectrum {
    std::vector<cplx> bins;
    std::size_t size() const { return bins.size(); }
};

struct Window {
    enum class Kind { Rect, Kaiser };
    Kind kind = Kind::Rect;
    double beta = 0.0;

    static Window rect() { return {Kind::Rect, 0.0}; }
    static Window kaiser(double beta) { return {Kind::Kaiser, beta}; }
};

/// Forward DFT, unnormalized: X[k] = sum_n x[n] W^{-kn}, W = e^{j 2pi/K}.
Spectrum dft(std::span<const cplx> x, std::size_t K);
/// Inverse DFT with 1/K.
std::vector<cplx> idft(const Spectrum& X);

/// Precomputed K x K twiddles W_K^{kn}, built from exact (k*n mod K) angles.
class DftMatrix {
public:
    explicit DftMatrix(std::size_t K);
    std::size_t size() const { return K_; }
    /// W_K^{+e} for integer exponent e.
    cplx w(long long e) const;
    /// out[k] = sum_n in[n] W^{sign*k*n}, no scaling.
    void apply(std::span<const cplx> in, std::span<cplx> out, int sign) const;

private:
    std::size_t K_;
    std::vector<cplx> roots_;
};

std::vector<double> kaiser_window(std::size_t n, double beta);

PrototypeFilter design_windowed_sinc(double cutoff_norm, std::size_t num_taps, Window window);

/// |H| in dB relative to the peak, sampled at omega_i = -pi + 2 pi i / n.
/// Exact zeros are reported as -300 dB.
std::vector<std::pair<double, double>> freq_response(const PrototypeFilter& f, std::size_t n_points);

/// H(e^{j omega}) of an arbitrary real FIR.
cplx dtft(std::span<const double> taps, double omega);

struct NmseReport {
    double db = 0.0;
    long lag = 0;
};

/// Correlation-aligned NMSE; estimate is shifted by the lag in [-max_lag,
/// max_lag] maximizing |sum x_hat(l+d) conj(x(l))|.
NmseReport nmse_aligned(const ComplexBuf& estimate, const ComplexBuf& reference, long max_lag);
double nmse_db(const ComplexBuf& estimate, const ComplexBuf& reference, long max_lag);

/// NMSE at a fixed lag: estimate(l + lag) against reference(l).
double nmse_db_at(const ComplexBuf& estimate, const ComplexBuf& reference, long lag);

inline constexpr double kNmseFloorDb = -120.0;

/// Averaged periodogram over non-overlapping Hann-windowed segments; n_fft must
/// be a power of two. Bin i covers frequency (i - n_fft/2) * rate / n_fft.
std::vector<double> periodogram(const ComplexBuf& x, std::size_t n_fft);

/// Frequency of the strongest periodogram bin, in Hz.
double periodogram_peak_hz(const ComplexBuf& x, std::size_t n_fft);

/// In-place radix-2 FFT (sign -1 forward). Size must be a power of two.
void fft_inplace(std::vector<cplx>& a, int sign);

}  // namespace pfbmux
