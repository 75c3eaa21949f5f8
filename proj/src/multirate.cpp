// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/multirate.hpp"

#include <algorithm>

#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux {

namespace detail {

void transposed_conv(std::span<const cplx> in, std::size_t stride, std::span<const double> kernel,
                     std::span<cplx> out) {
    const std::size_t ng = kernel.size();
    const std::size_t no = out.size();
    for (std::size_t r = 0; r < in.size(); ++r) {
        const cplx v = in[r];
        if (v == cplx{}) continue;
        const std::size_t base = r * stride;
        if (base >= no) break;
        const std::size_t n = std::min(ng, no - base);
        cplx* o = out.data() + base;
        for (std::size_t j = 0; j < n; ++j) o[j] += kernel[j] * v;
    }
}

void strided_conv(std::span<const cplx> in, std::size_t stride, std::span<const double> wflip, long pad_left,
                  std::span<cplx> out) {
    const long nin = static_cast<long>(in.size());
    const long nw = static_cast<long>(wflip.size());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const long start = static_cast<long>(n * stride) - pad_left;
        const long k0 = std::max(0L, -start);
        const long k1 = std::min(nw, nin - start);
        cplx acc{};
        for (long k = k0; k < k1; ++k) acc += wflip[static_cast<std::size_t>(k)] * in[static_cast<std::size_t>(start + k)];
        out[n] = acc;
    }
}

}  // namespace detail

ComplexBuf interpolate(const ComplexBuf& x, std::size_t L, const PrototypeFilter& g) {
    if (L == 0) throw ConfigError("interpolate: L must be >= 1");
    const double rate = x.sample_rate_hz() * static_cast<double>(L);
    if (x.empty()) return ComplexBuf({}, rate);
    std::vector<cplx> out((x.size() - 1) * L + g.size());
    detail::transposed_conv(x.samples(), L, g.taps(), out);
    return ComplexBuf(std::move(out), rate);
}

ComplexBuf decimate(const ComplexBuf& x, std::size_t M, const PrototypeFilter& h) {
    if (M == 0) throw ConfigError("decimate: M must be >= 1");
    const double rate = x.sample_rate_hz() / static_cast<double>(M);
    if (x.empty()) return ComplexBuf({}, rate);
    std::vector<cplx> out((x.size() + h.size() - 2) / M + 1);
    std::vector<double> wflip(h.taps().rbegin(), h.taps().rend());
    detail::strided_conv(x.samples(), M, wflip, static_cast<long>(h.size()) - 1, out);
    return ComplexBuf(std::move(out), rate);
}

double PolyphaseSet::tap(std::size_t rho, long m) const {
    long j = m - first_index;
    if (rho >= K || j < 0 || j >= static_cast<long>(branches.cols())) return 0.0;
    return branches(rho, static_cast<std::size_t>(j));
}

std::vector<double> PolyphaseSet::reconstruct() const {
    std::vector<double> p(prototype_len);
    const long s = static_cast<long>(stride);
    for (std::size_t i = 0; i < prototype_len; ++i) {
        const long n = static_cast<long>(i);
        if (role == PolyphaseRole::Analysis) {
            long rho = (s - n % s) % s;  // n = mM - rho
            p[i] = tap(static_cast<std::size_t>(rho), (n + rho) / s);
        } else {
            p[i] = tap(static_cast<std::size_t>(n % s), n / s);  // n = mL + rho
        }
    }
    return p;
}

PolyphaseSet polyphase_decompose_analysis(const PrototypeFilter& h, std::size_t K, std::size_t M) {
    if (K == 0 || M == 0 || K % M != 0) throw ConfigError("analysis decomposition: K must be a multiple of M");
    const long nh = static_cast<long>(h.size());
    const std::size_t pb = (h.size() - 1 + K - 1) / M + 1;
    PolyphaseSet ps{PolyphaseRole::Analysis, K, M, 0, h.size(), Matrix<double>(K, pb)};
    for (std::size_t rho = 0; rho < K; ++rho)
        for (std::size_t m = 0; m < pb; ++m) {
            long i = static_cast<long>(m * M) - static_cast<long>(rho);
            if (i >= 0 && i < nh) ps.branches(rho, m) = h[static_cast<std::size_t>(i)];
        }
    return ps;
}

PolyphaseSet polyphase_decompose_synthesis(const PrototypeFilter& f, std::size_t K, std::size_t L) {
    if (K == 0 || L == 0 || K % L != 0) throw ConfigError("synthesis decomposition: K must be a multiple of L");
    const std::size_t I = K / L;
    const long first = -static_cast<long>(I - 1);
    const std::size_t pb = (f.size() - 1) / L + I;
    const long nf = static_cast<long>(f.size());
    PolyphaseSet ps{PolyphaseRole::Synthesis, K, L, first, f.size(), Matrix<double>(K, pb)};
    for (std::size_t rho = 0; rho < K; ++rho)
        for (std::size_t j = 0; j < pb; ++j) {
            long i = (first + static_cast<long>(j)) * static_cast<long>(L) + static_cast<long>(rho);
            if (i >= 0 && i < nf) ps.branches(rho, j) = f[static_cast<std::size_t>(i)];
        }
    return ps;
}

BranchBuffers signal_decompose(const ComplexBuf& x, std::size_t K) {
    if (K == 0) throw ConfigError("signal_decompose: K must be >= 1");
    const std::size_t R = (x.size() + K - 1) / K;
    BranchBuffers b{Matrix<cplx>(K, R), x.sample_rate_hz() / static_cast<double>(K)};
    for (std::size_t n = 0; n < x.size(); ++n) b.data(n % K, n / K) = x[n];
    return b;
}

ComplexBuf interleave(const BranchBuffers& b) {
    const std::size_t K = b.data.rows();
    const std::size_t R = b.data.cols();
    std::vector<cplx> out(K * R);
    for (std::size_t rho = 0; rho < K; ++rho)
        for (std::size_t r = 0; r < R; ++r) out[r * K + rho] = b.data(rho, r);
    return ComplexBuf(std::move(out), b.branch_rate_hz * static_cast<double>(K));
}

ComplexBuf interleave(std::span<const ComplexBuf> branches) {
    if (branches.empty()) throw DimensionError("interleave: no branches");
    const std::size_t R = branches[0].size();
    const double rate = branches[0].sample_rate_hz();
    BranchBuffers b{Matrix<cplx>(branches.size(), R), rate};
    for (std::size_t rho = 0; rho < branches.size(); ++rho) {
        if (branches[rho].size() != R) throw DimensionError("interleave: branch lengths differ");
        if (branches[rho].sample_rate_hz() != rate) throw DimensionError("interleave: branch rates differ");
        for (std::size_t r = 0; r < R; ++r) b.data(rho, r) = branches[rho][r];
    }
    return interleave(b);
}

}  // namespace pfbmux
