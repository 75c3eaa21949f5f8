// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pfbmux/learn.hpp"
#include "pfbmux/mux.hpp"
#include "pfbmux/numerics.hpp"

namespace pfbmux {

using json = nlohmann::json;

/// Headerless little-endian float32 I/Q. Throws IoError.
std::vector<cplx> read_cf32(const std::string& path);
void write_cf32(const std::string& path, std::span<const cplx> samples);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

struct DesignedFilter {
    std::string role;  // "analysis" or "synthesis"
    PrototypeFilter filter;
    std::size_t K = 1;
    std::size_t stride = 1;  // M or L
    std::size_t I = 1;
    Window window;
};

json to_json(const DesignedFilter& d);
DesignedFilter designed_filter_from_json(const json& j);

struct TrainedFilter {
    LearnableSynthesisFilter synthesis;
    std::size_t K = 1, L = 1, I = 1;
    std::uint64_t seed = 0;
    int epochs = 0;
    double final_loss = 0.0;
    /// Present when the analysis prototype was trained jointly.
    std::optional<LearnableSynthesisFilter> analysis;
    std::size_t analysis_K = 0, analysis_M = 0;
};

json to_json(const TrainedFilter& t);
TrainedFilter trained_filter_from_json(const json& j);

json to_json(const MuxPlan& p);
json to_json(const DftMuxLayout& d);

}  // namespace pfbmux
