// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux {

AnalysisBankConfig::AnalysisBankConfig(std::size_t K_, std::size_t M_, PrototypeFilter h)
    : K(K_), M(M_), prototype(std::move(h)) {
    if (K == 0 || M == 0 || K % M != 0) throw ConfigError("analysis bank: K must be a positive multiple of M");
    I = K / M;
}

SynthesisBankConfig::SynthesisBankConfig(std::size_t K_, std::size_t L_, PrototypeFilter f)
    : K(K_), L(L_), prototype(std::move(f)) {
    if (K == 0 || L == 0 || K % L != 0) throw ConfigError("synthesis bank: K must be a positive multiple of L");
    I = K / L;
}

PrototypeFilter default_analysis_prototype(std::size_t K) {
    return design_windowed_sinc(kPi / static_cast<double>(K), 8 * K + 1, Window::kaiser(8.0));
}

PrototypeFilter default_synthesis_prototype(std::size_t K) {
    return design_windowed_sinc(std::min(kPi, 2.0 * kPi / static_cast<double>(K)), 8 * K + 1, Window::kaiser(8.0));
}

SubbandFrame::SubbandFrame(Matrix<cplx> d, double rate, double interval)
    : data(std::move(d)), subband_rate_hz(rate), subband_interval_hz(interval) {
    if (!(rate > 0.0) || !(interval > 0.0)) throw ConfigError("subband frame: rates must be positive");
    double I = rate / interval;
    if (I < 0.5 || std::abs(I - std::round(I)) > 1e-9 * I)
        throw ConfigError("subband frame: subband rate must be an integer multiple of the interval");
}

std::size_t analysis_frame_length(std::size_t n_in, const AnalysisBankConfig& cfg) {
    if (n_in == 0) return 0;
    const std::size_t R = (n_in + cfg.K - 1) / cfg.K;
    const std::size_t P = (cfg.prototype.size() - 1 + cfg.K - 1) / cfg.M + 1;
    return (R - 1) * cfg.I + P;
}

std::size_t synthesis_output_length(std::size_t T, const SynthesisBankConfig& cfg) {
    return T == 0 ? 0 : (T - 1) * cfg.L + cfg.prototype.size();
}

SubbandFrame afb_direct(const ComplexBuf& x, const AnalysisBankConfig& cfg) {
    const std::size_t K = cfg.K;
    const std::size_t T = analysis_frame_length(x.size(), cfg);
    const long nh = static_cast<long>(cfg.prototype.size());
    const long nx = static_cast<long>(x.size());
    DftMatrix W(K);
    Matrix<cplx> X(K, T);
    for (std::size_t m = 0; m < T; ++m) {
        const long c = static_cast<long>(m * cfg.M);
        const long n0 = std::max(0L, c - nh + 1);
        const long n1 = std::min(nx - 1, c);
        for (std::size_t k = 0; k < K; ++k) {
            cplx acc{};
            for (long n = n0; n <= n1; ++n)
                acc += cfg.prototype[static_cast<std::size_t>(c - n)] * (x[static_cast<std::size_t>(n)] *
                                                                        W.w(-static_cast<long long>(k) * n));
            X(k, m) = acc;
        }
    }
    const double rate = x.sample_rate_hz() / static_cast<double>(cfg.M);
    return SubbandFrame(std::move(X), rate, x.sample_rate_hz() / static_cast<double>(K));
}

SubbandFrame afb_polyphase(const ComplexBuf& x, const AnalysisBankConfig& cfg) {
    const std::size_t K = cfg.K;
    const std::size_t T = analysis_frame_length(x.size(), cfg);
    const double rate = x.sample_rate_hz() / static_cast<double>(cfg.M);
    const double interval = x.sample_rate_hz() / static_cast<double>(K);
    if (T == 0) return SubbandFrame(Matrix<cplx>(K, 0), rate, interval);

    const PolyphaseSet ps = polyphase_decompose_analysis(cfg.prototype, K, cfg.M);
    const BranchBuffers xb = signal_decompose(x, K);
    Matrix<cplx> Y(K, T);
    parallel_for(K, [&](std::size_t rho) { detail::transposed_conv(xb.data.row(rho), cfg.I, ps.branches.row(rho), Y.row(rho)); });

    const DftMatrix W(K);
    Matrix<cplx> X(K, T);
    parallel_for(T, [&](std::size_t m) {
        std::vector<cplx> col(K), out(K);
        for (std::size_t rho = 0; rho < K; ++rho) col[rho] = Y(rho, m);
        W.apply(col, out, -1);
        for (std::size_t k = 0; k < K; ++k) X(k, m) = out[k];
    });
    return SubbandFrame(std::move(X), rate, interval);
}

ComplexBuf sfb_direct(const SubbandFrame& S, const SynthesisBankConfig& cfg) {
    if (S.K() != cfg.K) throw DimensionError("sfb: frame has " + std::to_string(S.K()) + " rows, bank expects " +
                                             std::to_string(cfg.K));
    const std::size_t T = S.T();
    const std::size_t Ns = synthesis_output_length(T, cfg);
    const long nf = static_cast<long>(cfg.prototype.size());
    const long L = static_cast<long>(cfg.L);
    DftMatrix W(cfg.K);
    std::vector<cplx> s(Ns);
    for (std::size_t ni = 0; ni < Ns; ++ni) {
        const long n = static_cast<long>(ni);
        const long low = n - nf + 1;
        const long m0 = low <= 0 ? 0 : (low + L - 1) / L;
        const long m1 = std::min(static_cast<long>(T) - 1, n / L);
        cplx acc{};
        for (std::size_t k = 0; k < cfg.K; ++k) {
            cplx inner{};
            for (long m = m0; m <= m1; ++m) {
                long t = n - L * m;
                inner += S.data(k, static_cast<std::size_t>(m)) * cfg.prototype[static_cast<std::size_t>(t)];
            }
            acc += W.w(static_cast<long long>(k) * n) * inner;
        }
        s[ni] = acc;
    }
    return ComplexBuf(std::move(s), S.subband_rate_hz * static_cast<double>(cfg.L));
}

Matrix<cplx> synthesis_branch_inputs(const Matrix<cplx>& S, const DftMatrix& W) {
    const std::size_t K = S.rows();
    const std::size_t T = S.cols();
    Matrix<cplx> out(K, T);
    parallel_for(T, [&](std::size_t m) {
        std::vector<cplx> col(K), res(K);
        for (std::size_t k = 0; k < K; ++k) col[k] = S(k, m);
        W.apply(col, res, +1);
        for (std::size_t rho = 0; rho < K; ++rho) out(rho, m) = res[rho];
    });
    return out;
}

ComplexBuf sfb_polyphase(const SubbandFrame& S, const SynthesisBankConfig& cfg) {
    if (S.K() != cfg.K) throw DimensionError("sfb: frame has " + std::to_string(S.K()) + " rows, bank expects " +
                                             std::to_string(cfg.K));
    const std::size_t K = cfg.K;
    const std::size_t T = S.T();
    const std::size_t Ns = synthesis_output_length(T, cfg);
    const double rate = S.subband_rate_hz * static_cast<double>(cfg.L);
    if (Ns == 0) return ComplexBuf({}, rate);

    const DftMatrix W(K);
    const Matrix<cplx> Sh = synthesis_branch_inputs(S.data, W);
    const PolyphaseSet ps = polyphase_decompose_synthesis(cfg.prototype, K, cfg.L);
    const std::size_t P = ps.branch_length();
    const long pad = static_cast<long>(P) - 1 + ps.first_index;
    const std::size_t R = (Ns + K - 1) / K;
    BranchBuffers out{Matrix<cplx>(K, R), rate / static_cast<double>(K)};
    parallel_for(K, [&](std::size_t rho) {
        auto q = ps.branches.row(rho);
        std::vector<double> wflip(q.rbegin(), q.rend());
        detail::strided_conv(Sh.row(rho), cfg.I, wflip, pad, out.data.row(rho));
    });
    ComplexBuf full = interleave(out);
    std::vector<cplx> s(full.samples().begin(), full.samples().begin() + static_cast<long>(Ns));
    return ComplexBuf(std::move(s), rate);
}

std::vector<double> SubbandRouter::hilbert_taps(std::size_t J, double beta) {
    std::vector<double> w = kaiser_window(2 * J + 1, beta);
    std::vector<double> g(2 * J + 1, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        long n = static_cast<long>(i) - static_cast<long>(J);
        if (n % 2 != 0) g[i] = 2.0 / (kPi * static_cast<double>(n)) * w[i];
    }
    return g;
}

SubbandRouter::SubbandRouter(std::size_t K_ana, std::size_t K_syn, long shift, double delay, const RoutingOptions& opt)
    : Ka_(K_ana), Ks_(K_syn), shift_(shift) {
    if (K_ana == 0 || K_syn == 0 || K_ana > K_syn) throw ConfigError("router: need 0 < K_ana <= K_syn");
    split_ = opt.split_nyquist && K_ana % 2 == 0 && opt.hilbert_half_len > 0;
    J_ = opt.hilbert_half_len;
    if (split_) hilb_ = hilbert_taps(J_, opt.hilbert_beta);
    phase_.resize(Ks_);
    const DftMatrix W(Ks_);
    for (std::size_t k = 0; k < Ks_; ++k) {
        if (delay == std::round(delay)) {
            phase_[k] = W.w(-static_cast<long long>(k) * static_cast<long long>(std::llround(delay)));
        } else {
            double a = -2.0 * kPi * static_cast<double>(k) * delay / static_cast<double>(Ks_);
            phase_[k] = {std::cos(a), std::sin(a)};
        }
    }
}

std::size_t SubbandRouter::destination(std::size_t k) const {
    long ka = static_cast<long>(Ka_);
    long kt = static_cast<long>(k) < (ka + 1) / 2 ? static_cast<long>(k) : static_cast<long>(k) - ka;
    if (split_ && static_cast<long>(k) == ka / 2) kt = -ka / 2;
    long ks = static_cast<long>(Ks_);
    return static_cast<std::size_t>((((kt + shift_) % ks) + ks) % ks);
}

std::vector<std::size_t> SubbandRouter::occupied_bins() const {
    std::set<std::size_t> bins;
    for (std::size_t k = 0; k < Ka_; ++k) bins.insert(destination(k));
    if (split_) {
        long ks = static_cast<long>(Ks_);
        bins.insert(static_cast<std::size_t>((((static_cast<long>(Ka_) / 2 + shift_) % ks) + ks) % ks));
    }
    return {bins.begin(), bins.end()};
}

void SubbandRouter::accumulate(const Matrix<cplx>& X, Matrix<cplx>& out, cplx scale, std::size_t pad) const {
    if (X.rows() != Ka_) throw DimensionError("router: frame row count does not match K_ana");
    if (out.rows() != Ks_ || out.cols() < output_frames(X.cols()) + pad)
        throw DimensionError("router: output frame too small");
    const std::size_t T = X.cols();
    const std::size_t J = frame_delay();
    const long ks = static_cast<long>(Ks_);
    for (std::size_t k = 0; k < Ka_; ++k) {
        if (split_ && k == Ka_ / 2) continue;
        const std::size_t kp = destination(k);
        const cplx w = scale * phase_[kp];
        for (std::size_t t = 0; t < T; ++t) out(kp, t + J + pad) += w * X(k, t);
    }
    if (!split_) return;
    const std::size_t kn = Ka_ / 2;
    const std::size_t kneg = destination(kn);
    const std::size_t kpos = static_cast<std::size_t>((((static_cast<long>(kn) + shift_) % ks) + ks) % ks);
    const cplx wneg = 0.5 * scale * phase_[kneg];
    const cplx wpos = 0.5 * scale * phase_[kpos];
    const cplx j1{0.0, 1.0};
    const std::size_t nt = T + 2 * J;
    for (std::size_t t = 0; t < nt; ++t) {
        cplx d = (t >= J && t - J < T) ? X(kn, t - J) : cplx{};
        cplx h{};
        for (std::size_t i = 0; i < hilb_.size(); ++i) {
            if (hilb_[i] == 0.0 || t < i || t - i >= T) continue;
            h += hilb_[i] * X(kn, t - i);
        }
        out(kneg, t + pad) += wneg * (d + j1 * h);
        out(kpos, t + pad) += wpos * (d - j1 * h);
    }
}

Matrix<cplx> SubbandRouter::adjoint(const Matrix<cplx>& g_out, std::size_t T) const {
    if (g_out.rows() != Ks_ || g_out.cols() < output_frames(T)) throw DimensionError("router adjoint: shape mismatch");
    Matrix<cplx> g(Ka_, T);
    const std::size_t J = frame_delay();
    const long ks = static_cast<long>(Ks_);
    for (std::size_t k = 0; k < Ka_; ++k) {
        if (split_ && k == Ka_ / 2) continue;
        const std::size_t kp = destination(k);
        const cplx w = std::conj(phase_[kp]);
        for (std::size_t t = 0; t < T; ++t) g(k, t) = w * g_out(kp, t + J);
    }
    if (!split_) return g;
    const std::size_t kn = Ka_ / 2;
    const std::size_t kneg = destination(kn);
    const std::size_t kpos = static_cast<std::size_t>((((static_cast<long>(kn) + shift_) % ks) + ks) % ks);
    const cplx wneg = 0.5 * std::conj(phase_[kneg]);
    const cplx wpos = 0.5 * std::conj(phase_[kpos]);
    const cplx j1{0.0, 1.0};
    for (std::size_t t = 0; t < T; ++t) {
        cplx hneg{}, hpos{};
        for (std::size_t i = 0; i < hilb_.size(); ++i) {
            if (hilb_[i] == 0.0) continue;
            hneg += hilb_[i] * g_out(kneg, t + i);
            hpos += hilb_[i] * g_out(kpos, t + i);
        }
        g(kn, t) = wneg * (g_out(kneg, t + J) - j1 * hneg) + wpos * (g_out(kpos, t + J) + j1 * hpos);
    }
    return g;
}

namespace {

void check_compatible(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg) {
    if (acfg.I != scfg.I) throw ConfigError("cascade: analysis and synthesis oversampling ratios differ");
    if (scfg.K % acfg.K != 0) throw ConfigError("cascade: K_syn must be a multiple of K_ana");
}

SubbandRouter cascade_router(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg, const RoutingOptions& opt) {
    SubbandRouter probe(acfg.K, scfg.K, 0, 0.0, opt);
    double d = acfg.prototype.group_delay() * static_cast<double>(scfg.K / acfg.K) +
               static_cast<double>(probe.frame_delay() * scfg.L) + scfg.prototype.group_delay();
    return SubbandRouter(acfg.K, scfg.K, 0, d, opt);
}

}  // namespace

double cascade_delay(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg, const SubbandRouter& router) {
    return acfg.prototype.group_delay() * static_cast<double>(scfg.K) / static_cast<double>(acfg.K) +
           static_cast<double>(router.frame_delay() * scfg.L) + scfg.prototype.group_delay();
}

ComplexBuf cascade(const ComplexBuf& x, const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg,
                   const RoutingOptions& opt) {
    check_compatible(acfg, scfg);
    const SubbandRouter router = cascade_router(acfg, scfg, opt);
    const SubbandFrame X = afb_polyphase(x, acfg);
    Matrix<cplx> S(scfg.K, X.T() == 0 ? 0 : router.output_frames(X.T()));
    if (X.T() > 0) router.accumulate(X.data, S);
    return sfb_polyphase(SubbandFrame(std::move(S), X.subband_rate_hz, X.subband_interval_hz), scfg);
}

double cascade_gain(const AnalysisBankConfig& acfg, const SynthesisBankConfig& scfg, const RoutingOptions& opt,
                    double probe_omega) {
    check_compatible(acfg, scfg);
    const std::size_t r = scfg.K / acfg.K;
    const std::size_t n_in = 4 * (acfg.prototype.size() + scfg.prototype.size()) + 64 * acfg.K;
    std::vector<cplx> tone(n_in);
    for (std::size_t n = 0; n < n_in; ++n) {
        double a = probe_omega * static_cast<double>(n);
        tone[n] = {std::cos(a), std::sin(a)};
    }
    const ComplexBuf y = cascade(ComplexBuf(std::move(tone), 1.0), acfg, scfg, opt);
    const SubbandRouter router = cascade_router(acfg, scfg, opt);
    const std::size_t d = static_cast<std::size_t>(std::ceil(cascade_delay(acfg, scfg, router)));
    const std::size_t lo = 2 * d;
    const std::size_t end = std::min(y.size(), n_in * r);
    const std::size_t hi = end > 3 * d ? end - d : lo;
    if (hi <= lo) throw NumericError("cascade_gain: probe too short for the filter lengths");
    double p = 0.0;
    for (std::size_t n = lo; n < hi; ++n) p += std::norm(y[n]);
    return std::sqrt(p / static_cast<double>(hi - lo));
}

}  // namespace pfbmux
