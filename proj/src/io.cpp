// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pfbmux/errors.hpp"

namespace pfbmux {

static_assert(std::endian::native == std::endian::little, "cf32 I/O assumes a little-endian host");

std::vector<cplx> read_cf32(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed for '" + path + "'");
    if (bytes.size() % 8 != 0) throw IoError("'" + path + "' is not a cf32 file (size not a multiple of 8)");
    std::vector<cplx> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float iq[2];
        std::memcpy(iq, bytes.data() + 8 * i, 8);
        if (!std::isfinite(iq[0]) || !std::isfinite(iq[1])) throw IoError("'" + path + "' contains non-finite samples");
        out[i] = {iq[0], iq[1]};
    }
    return out;
}

void write_cf32(const std::string& path, std::span<const cplx> samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::vector<float> buf(2 * samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        buf[2 * i] = static_cast<float>(samples[i].real());
        buf[2 * i + 1] = static_cast<float>(samples[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field '" + key + "' has the wrong type");
    }
}

json window_json(const Window& w) {
    if (w.kind == Window::Kind::Kaiser) return {{"type", "kaiser"}, {"beta", w.beta}};
    return {{"type", "rect"}};
}

Window window_from(const json& j) {
    if (j.value("type", std::string("rect")) == "kaiser") return Window::kaiser(j.value("beta", 8.0));
    return Window::rect();
}

}  // namespace

json to_json(const DesignedFilter& d) {
    json j;
    j["role"] = d.role;
    j["taps"] = d.filter.taps();
    j["num_taps"] = d.filter.size();
    j["cutoff_norm"] = d.filter.cutoff_norm();
    j["bandwidth_norm"] = 2.0 * d.filter.cutoff_norm();
    j["symmetric"] = d.filter.symmetric();
    j["window"] = window_json(d.window);
    j["K"] = d.K;
    j[d.role == "analysis" ? "M" : "L"] = d.stride;
    j["I"] = d.I;
    return j;
}

DesignedFilter designed_filter_from_json(const json& j) {
    const std::string w = "filter";
    DesignedFilter d;
    d.role = get<std::string>(j, "role", w);
    d.filter = PrototypeFilter(get<std::vector<double>>(j, "taps", w), get<double>(j, "cutoff_norm", w),
                               get<bool>(j, "symmetric", w));
    d.K = get<std::size_t>(j, "K", w);
    d.stride = get<std::size_t>(j, d.role == "analysis" ? "M" : "L", w);
    d.I = get<std::size_t>(j, "I", w);
    if (j.contains("window")) d.window = window_from(j["window"]);
    return d;
}

json to_json(const TrainedFilter& t) {
    json j;
    j["total_len"] = t.synthesis.total_len();
    j["half_taps"] = t.synthesis.half_taps();
    j["cutoff_norm"] = t.synthesis.cutoff_norm();
    j["K"] = t.K;
    j["L"] = t.L;
    j["I"] = t.I;
    j["parameter_count"] = t.synthesis.parameter_count();
    j["metadata"] = {{"seed", t.seed}, {"epochs", t.epochs}, {"final_loss", t.final_loss}};
    if (t.analysis) {
        j["analysis"] = {{"K", t.analysis_K},
                         {"M", t.analysis_M},
                         {"total_len", t.analysis->total_len()},
                         {"half_taps", t.analysis->half_taps()},
                         {"cutoff_norm", t.analysis->cutoff_norm()}};
    }
    return j;
}

TrainedFilter trained_filter_from_json(const json& j) {
    const std::string w = "trained filter";
    TrainedFilter t;
    t.synthesis = LearnableSynthesisFilter(get<std::vector<double>>(j, "half_taps", w), get<std::size_t>(j, "total_len", w),
                                           get<double>(j, "cutoff_norm", w));
    t.K = get<std::size_t>(j, "K", w);
    t.L = get<std::size_t>(j, "L", w);
    t.I = get<std::size_t>(j, "I", w);
    if (j.contains("metadata")) {
        const json& m = j["metadata"];
        t.seed = m.value("seed", std::uint64_t{0});
        t.epochs = m.value("epochs", 0);
        t.final_loss = m.value("final_loss", 0.0);
    }
    if (j.contains("analysis")) {
        const json& a = j["analysis"];
        t.analysis = LearnableSynthesisFilter(get<std::vector<double>>(a, "half_taps", w + " analysis"),
                                              get<std::size_t>(a, "total_len", w + " analysis"),
                                              get<double>(a, "cutoff_norm", w + " analysis"));
        t.analysis_K = get<std::size_t>(a, "K", w + " analysis");
        t.analysis_M = get<std::size_t>(a, "M", w + " analysis");
    }
    return t;
}

json to_json(const MuxPlan& p) {
    json j;
    j["wideband"] = {{"sample_rate_hz", p.wideband.sample_rate_hz},
                     {"K_syn", p.wideband.K_syn},
                     {"I", p.wideband.I},
                     {"L", p.wideband.L()},
                     {"subband_interval_hz", p.wideband.subband_interval_hz()}};
    j["routing"] = {{"split_nyquist", p.routing.split_nyquist},
                    {"hilbert_half_len", p.routing.hilbert_half_len},
                    {"hilbert_beta", p.routing.hilbert_beta}};
    j["allow_overlap"] = p.allow_overlap;
    j["streams"] = json::array();
    for (const auto& s : p.streams)
        j["streams"].push_back({{"name", s.name},
                                {"sample_rate_hz", s.sample_rate_hz},
                                {"K_ana", s.K_ana},
                                {"M_ana", s.M_ana},
                                {"ratio", s.ratio},
                                {"shift", s.shift},
                                {"bin_map", s.bin_map},
                                {"bins", s.bins}});
    return j;
}

json to_json(const DftMuxLayout& d) {
    return {{"resolution_hz", d.resolution_hz},
            {"idft_size", d.idft_size},
            {"dft_sizes", d.dft_sizes},
            {"shifts", d.shifts},
            {"occupied_bins", d.occupied_bins}};
}

}  // namespace pfbmux
