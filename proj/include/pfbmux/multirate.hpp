// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pfbmux/numerics.hpp"
#include "pfbmux/types.hpp"

namespace pfbmux {

/// x'(m) = sum_r g(m - rL) x(r). Length (len(x)-1)L + len(g), rate L*fs.
ComplexBuf interpolate(const ComplexBuf& x, std::size_t L, const PrototypeFilter& g);

/// x'(m) = sum_n h(Mm - n) x(n), i.e. every M-th sample of the full
/// convolution starting at index 0. Length floor((len(x)+len(h)-2)/M) + 1.
ComplexBuf decimate(const ComplexBuf& x, std::size_t M, const PrototypeFilter& h);

enum class PolyphaseRole { Analysis, Synthesis };

/// K branch subfilters stored as a dense K x P matrix. Column j holds the
/// branch tap at index m = first_index + j. Analysis sets start at 0;
/// synthesis sets start at -(I-1) because q_rho(m) = f(mL + rho) is nonzero
/// for negative m once rho >= L.
struct PolyphaseSet {
    PolyphaseRole role = PolyphaseRole::Analysis;
    std::size_t K = 1;
    std::size_t stride = 1;
    long first_index = 0;
    std::size_t prototype_len = 0;
    Matrix<double> branches;

    std::size_t branch_length() const { return branches.cols(); }
    /// Tap at branch rho, index m; zero outside storage.
    double tap(std::size_t rho, long m) const;
    /// Rebuilds the prototype from branches [0, stride).
    std::vector<double> reconstruct() const;
};

PolyphaseSet polyphase_decompose_analysis(const PrototypeFilter& h, std::size_t K, std::size_t M);
PolyphaseSet polyphase_decompose_synthesis(const PrototypeFilter& f, std::size_t K, std::size_t L);

/// Signal branches x_rho(r) = x(rK + rho) as a K x ceil(N/K) matrix.
struct BranchBuffers {
    Matrix<cplx> data;
    double branch_rate_hz = 1.0;
};

BranchBuffers signal_decompose(const ComplexBuf& x, std::size_t K);
/// s(rK + rho) = branch_rho(r).
ComplexBuf interleave(const BranchBuffers& b);
/// Same, from separate buffers; throws DimensionError on unequal lengths or rates.
ComplexBuf interleave(std::span<const ComplexBuf> branches);

namespace detail {

/// out[m] += sum_r kernel[m - r*stride] * in[r] over the range of out.
void transposed_conv(std::span<const cplx> in, std::size_t stride, std::span<const double> kernel,
                     std::span<cplx> out);

/// out[n] = sum_k wflip[k] * in[n*stride + k - pad_left], zero outside in.
void strided_conv(std::span<const cplx> in, std::size_t stride, std::span<const double> wflip, long pad_left,
                  std::span<cplx> out);

}  // namespace detail

}  // namespace pfbmux
