// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pfbmux/learn.hpp"
#include "pfbmux/mux.hpp"
#include "pfbmux/numerics.hpp"

namespace pfbmux::testing {

std::vector<cplx> rand_cplx(std::size_t n, std::uint64_t seed);
std::vector<double> rand_real(std::size_t n, std::uint64_t seed);
ComplexBuf rand_buf(std::size_t n, std::uint64_t seed, double rate = 1.0);

/// max |a - b| / max |b| over the common length.
double rel_err(std::span<const cplx> a, std::span<const cplx> b);
double rel_err(const Matrix<cplx>& a, const Matrix<cplx>& b);
double max_abs(std::span<const cplx> a);

/// 4 MHz -> 16 MHz cascade (K_ana 8, K_syn 32, I 2) with a 253-tap synthesis filter.
CascadeModel model_4x(const LearnableSynthesisFilter& syn);
/// 8 MHz -> 16 MHz cascade (K_ana 16, K_syn 32, I 2).
CascadeModel model_2x(const LearnableSynthesisFilter& syn);
LearnableSynthesisFilter sinc_init_253();

/// Short training run of model_4x on a reduced mixture, computed once per process.
const LearnableSynthesisFilter& quick_trained_4x();

/// Three 4 MHz streams at -5, 0, +5 MHz inside a 16 MHz wideband.
WidebandSpec wideband_16();
std::vector<StreamSpec> three_zigbee(std::size_t n_bits, std::uint64_t seed);

/// Power of x at exactly frequency omega, relative to total power, in dB;
/// over samples [lo, hi).
double tone_purity_db(std::span<const cplx> x, double omega, std::size_t lo, std::size_t hi);

std::string temp_path(const std::string& name);

}  // namespace pfbmux::testing
