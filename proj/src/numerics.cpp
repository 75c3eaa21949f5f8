// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux {

ComplexBuf::ComplexBuf(std::vector<cplx> samples, double sample_rate_hz)
    : samples_(std::move(samples)), rate_(sample_rate_hz) {
    if (!(rate_ > 0.0) || !std::isfinite(rate_))
        throw ConfigError("sample rate must be positive and finite");
    for (const auto& s : samples_)
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
            throw NumericError("non-finite sample in buffer");
}

double ComplexBuf::energy() const {
    double e = 0.0;
    for (const auto& s : samples_) e += std::norm(s);
    return e;
}

double ComplexBuf::mean_power() const {
    return samples_.empty() ? 0.0 : energy() / static_cast<double>(samples_.size());
}

PrototypeFilter::PrototypeFilter(std::vector<double> taps, double cutoff_norm, bool symmetric)
    : taps_(std::move(taps)), cutoff_(cutoff_norm), symmetric_(symmetric) {
    if (taps_.empty()) throw ConfigError("prototype filter needs at least one tap");
    for (double t : taps_)
        if (!std::isfinite(t)) throw ConfigError("prototype filter taps must be finite");
    if (!(cutoff_ > 0.0 && cutoff_ <= kPi)) throw ConfigError("cutoff_norm must lie in (0, pi]");
    if (symmetric_) {
        const std::size_t n = taps_.size();
        for (std::size_t i = 0; i < n / 2; ++i)
            if (taps_[i] != taps_[n - 1 - i]) throw ConfigError("taps declared symmetric are not mirrored");
    }
}

PrototypeFilter PrototypeFilter::from_complex(std::span<const cplx> taps, double cutoff_norm, bool symmetric) {
    std::vector<double> re;
    re.reserve(taps.size());
    for (const auto& t : taps) {
        if (t.imag() != 0.0) throw ConfigError("complex prototype filters are not supported");
        re.push_back(t.real());
    }
    return PrototypeFilter(std::move(re), cutoff_norm, symmetric);
}

PrototypeFilter PrototypeFilter::scaled(double g) const {
    std::vector<double> t = taps_;
    for (auto& v : t) v *= g;
    return PrototypeFilter(std::move(t), cutoff_, symmetric_);
}

DftMatrix::DftMatrix(std::size_t K) : K_(K), roots_(K) {
    if (K == 0) throw DimensionError("DFT size must be positive");
    for (std::size_t i = 0; i < K; ++i) {
        double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(K);
        roots_[i] = {std::cos(a), std::sin(a)};
    }
    // exact values on the axes keep small transforms free of rounding noise
    if (K % 4 == 0) {
        roots_[K / 4] = {0.0, 1.0};
        roots_[3 * K / 4] = {0.0, -1.0};
    }
    if (K % 2 == 0) roots_[K / 2] = {-1.0, 0.0};
}

cplx DftMatrix::w(long long e) const {
    long long k = static_cast<long long>(K_);
    long long r = e % k;
    if (r < 0) r += k;
    return roots_[static_cast<std::size_t>(r)];
}

void DftMatrix::apply(std::span<const cplx> in, std::span<cplx> out, int sign) const {
    if (K_ >= 16 && (K_ & (K_ - 1)) == 0) {
        if (out.data() != in.data()) std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(K_), out.begin());
        for (std::size_t i = 1, j = 0; i < K_; ++i) {
            std::size_t bit = K_ >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(out[i], out[j]);
        }
        for (std::size_t len = 2; len <= K_; len <<= 1) {
            const std::size_t half = len / 2, stride = K_ / len;
            for (std::size_t i = 0; i < K_; i += len)
                for (std::size_t k = 0; k < half; ++k) {
                    const std::size_t e = k * stride;
                    const cplx v = out[i + k + half] * roots_[sign >= 0 ? e : (K_ - e) % K_];
                    const cplx u = out[i + k];
                    out[i + k] = u + v;
                    out[i + k + half] = u - v;
                }
        }
        return;
    }
    for (std::size_t k = 0; k < K_; ++k) {
        cplx acc{0.0, 0.0};
        std::size_t idx = 0;
        const std::size_t step = sign >= 0 ? k : (K_ - k) % K_;
        for (std::size_t n = 0; n < K_; ++n) {
            acc += in[n] * roots_[idx];
            idx += step;
            if (idx >= K_) idx -= K_;
        }
        out[k] = acc;
    }
}

Spectrum dft(std::span<const cplx> x, std::size_t K) {
    if (K == 0 || x.size() != K) throw DimensionError("dft: input length must equal K");
    DftMatrix W(K);
    Spectrum s{std::vector<cplx>(K)};
    W.apply(x, s.bins, -1);
    return s;
}

std::vector<cplx> idft(const Spectrum& X) {
    const std::size_t K = X.size();
    if (K == 0) throw DimensionError("idft: empty spectrum");
    DftMatrix W(K);
    std::vector<cplx> x(K);
    W.apply(X.bins, x, +1);
    const double s = 1.0 / static_cast<double>(K);
    for (auto& v : x) v *= s;
    return x;
}

std::vector<double> kaiser_window(std::size_t n, double beta) {
    std::vector<double> w(n, 1.0);
    if (n == 1) return w;
    const double i0b = std::cyl_bessel_i(0.0, beta);
    const double half = (static_cast<double>(n) - 1.0) / 2.0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = (static_cast<double>(i) - half) / half;
        w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - t * t))) / i0b;
    }
    return w;
}

PrototypeFilter design_windowed_sinc(double cutoff_norm, std::size_t num_taps, Window window) {
    if (num_taps == 0 || num_taps % 2 == 0) throw ConfigError("num_taps must be odd");
    if (!(cutoff_norm > 0.0 && cutoff_norm <= kPi)) throw ConfigError("cutoff_norm must lie in (0, pi]");
    std::vector<double> win = window.kind == Window::Kind::Kaiser ? kaiser_window(num_taps, window.beta)
                                                                   : std::vector<double>(num_taps, 1.0);
    const std::size_t c = num_taps / 2;
    std::vector<double> taps(num_taps);
    for (std::size_t i = 0; i <= c; ++i) {
        double n = static_cast<double>(i) - static_cast<double>(c);
        double s = n == 0.0 ? cutoff_norm / kPi : std::sin(cutoff_norm * n) / (kPi * n);
        taps[i] = s * win[i];
    }
    double sum = taps[c];
    for (std::size_t i = 0; i < c; ++i) sum += 2.0 * taps[i];
    if (sum == 0.0) throw ConfigError("windowed sinc has zero DC gain");
    for (std::size_t i = 0; i <= c; ++i) {
        taps[i] /= sum;
        taps[num_taps - 1 - i] = taps[i];
    }
    return PrototypeFilter(std::move(taps), cutoff_norm, true);
}

cplx dtft(std::span<const double> taps, double omega) {
    cplx acc{0.0, 0.0};
    for (std::size_t n = 0; n < taps.size(); ++n) {
        double a = -omega * static_cast<double>(n);
        acc += taps[n] * cplx(std::cos(a), std::sin(a));
    }
    return acc;
}

std::vector<std::pair<double, double>> freq_response(const PrototypeFilter& f, std::size_t n_points) {
    if (n_points < f.size()) throw DimensionError("freq_response: n_points must be >= filter length");
    std::vector<double> mag(n_points);
    std::vector<double> omega(n_points);
    double peak = 0.0;
    for (std::size_t i = 0; i < n_points; ++i) {
        omega[i] = -kPi + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_points);
        mag[i] = std::abs(dtft(f.taps(), omega[i]));
        peak = std::max(peak, mag[i]);
    }
    std::vector<std::pair<double, double>> out(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        double db = (peak > 0.0 && mag[i] > 0.0) ? 20.0 * std::log10(mag[i] / peak) : -300.0;
        out[i] = {omega[i], std::max(db, -300.0)};
    }
    return out;
}

namespace {

double to_db_clamped(double num, double den) {
    if (num <= 0.0) return kNmseFloorDb;
    return std::max(kNmseFloorDb, 10.0 * std::log10(num / den));
}

void check_rates(const ComplexBuf& a, const ComplexBuf& b) {
    if (a.sample_rate_hz() != b.sample_rate_hz()) throw MetricError("nmse: sample rates differ");
}

}  // namespace

double nmse_db_at(const ComplexBuf& estimate, const ComplexBuf& reference, long lag) {
    check_rates(estimate, reference);
    const double den = reference.energy();
    if (!(den > 0.0)) throw MetricError("nmse: reference has zero energy");
    const auto& e = estimate.samples();
    const auto& r = reference.samples();
    const long ne = static_cast<long>(e.size());
    double num = 0.0;
    for (std::size_t l = 0; l < r.size(); ++l) {
        long j = static_cast<long>(l) + lag;
        cplx v = (j >= 0 && j < ne) ? e[static_cast<std::size_t>(j)] : cplx{};
        num += std::norm(v - r[l]);
    }
    return to_db_clamped(num, den);
}

NmseReport nmse_aligned(const ComplexBuf& estimate, const ComplexBuf& reference, long max_lag) {
    check_rates(estimate, reference);
    if (!(reference.energy() > 0.0)) throw MetricError("nmse: reference has zero energy");
    max_lag = std::max(0L, max_lag);
    const auto& e = estimate.samples();
    const auto& r = reference.samples();
    const long ne = static_cast<long>(e.size());
    const long nr = static_cast<long>(r.size());
    const std::size_t nl = static_cast<std::size_t>(2 * max_lag + 1);
    std::vector<double> corr(nl, 0.0);
    parallel_for(nl, [&](std::size_t i) {
        long d = static_cast<long>(i) - max_lag;
        long lo = std::max(0L, -d);
        long hi = std::min(nr, ne - d);
        cplx acc{};
        for (long l = lo; l < hi; ++l) acc += e[static_cast<std::size_t>(l + d)] * std::conj(r[static_cast<std::size_t>(l)]);
        corr[i] = std::abs(acc);
    });
    // ties resolve to the smallest |lag|, then the negative one
    long best = 0;
    double best_v = corr[static_cast<std::size_t>(max_lag)];
    for (long a = 1; a <= max_lag; ++a) {
        for (long d : {-a, a}) {
            double v = corr[static_cast<std::size_t>(d + max_lag)];
            if (v > best_v) {
                best_v = v;
                best = d;
            }
        }
    }
    return {nmse_db_at(estimate, reference, best), best};
}

double nmse_db(const ComplexBuf& estimate, const ComplexBuf& reference, long max_lag) {
    return nmse_aligned(estimate, reference, max_lag).db;
}

void fft_inplace(std::vector<cplx>& a, int sign) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw DimensionError("fft size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = sign * 2.0 * kPi / static_cast<double>(len);
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                cplx w(std::cos(ang * static_cast<double>(k)), std::sin(ang * static_cast<double>(k)));
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
}

std::vector<double> periodogram(const ComplexBuf& x, std::size_t n_fft) {
    if (n_fft == 0 || (n_fft & (n_fft - 1)) != 0) throw DimensionError("periodogram: n_fft must be a power of two");
    std::vector<double> acc(n_fft, 0.0);
    std::vector<double> win(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i)
        win[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n_fft));
    const auto& s = x.samples();
    std::size_t segs = std::max<std::size_t>(1, s.size() / n_fft);
    std::vector<cplx> buf(n_fft);
    for (std::size_t g = 0; g < segs; ++g) {
        for (std::size_t i = 0; i < n_fft; ++i) {
            std::size_t j = g * n_fft + i;
            buf[i] = j < s.size() ? s[j] * win[i] : cplx{};
        }
        fft_inplace(buf, -1);
        for (std::size_t i = 0; i < n_fft; ++i) acc[(i + n_fft / 2) % n_fft] += std::norm(buf[i]);
    }
    for (auto& v : acc) v /= static_cast<double>(segs);
    return acc;
}

double periodogram_peak_hz(const ComplexBuf& x, std::size_t n_fft) {
    auto p = periodogram(x, n_fft);
    std::size_t best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    return (static_cast<double>(best) - static_cast<double>(n_fft / 2)) * x.sample_rate_hz() / static_cast<double>(n_fft);
}

}  // namespace pfbmux
