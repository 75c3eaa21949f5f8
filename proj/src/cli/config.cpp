// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <regex>

#include "pfbmux/cli.hpp"
#include "pfbmux/errors.hpp"

namespace pfbmux::cli {

namespace fs = std::filesystem;

Node::Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("field '" + (path_.empty() ? "/" : path_) + "' must be an object");
}

bool Node::has(const std::string& key) const { return j_->contains(key) && !(*j_)[key].is_null(); }

const json& Node::at(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing field '" + field(key) + "'");
    return (*j_)[key];
}

Node Node::sub(const std::string& key) const { return Node(at(key), field(key)); }

Node Node::sub_or_empty(const std::string& key) const {
    static const json empty = json::object();
    return has(key) ? sub(key) : Node(empty, field(key));
}

std::vector<Node> Node::array(const std::string& key) const {
    const json& a = at(key);
    if (!a.is_array()) throw ConfigError("field '" + field(key) + "' must be an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.emplace_back(a[i], field(key) + "/" + std::to_string(i));
    return out;
}

double Node::number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError("field '" + field(key) + "' must be a number");
    return v.get<double>();
}

double Node::number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

std::size_t Node::count(const std::string& key) const {
    const json& v = at(key);
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d) && d < 9e15) return static_cast<std::size_t>(d);
    }
    throw ConfigError("field '" + field(key) + "' must be a non-negative integer");
}

std::size_t Node::count(const std::string& key, std::size_t def) const { return has(key) ? count(key) : def; }

std::string Node::str(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError("field '" + field(key) + "' must be a string");
    return v.get<std::string>();
}

std::string Node::str(const std::string& key, const std::string& def) const { return has(key) ? str(key) : def; }

bool Node::flag(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError("field '" + field(key) + "' must be a boolean");
    return v.get<bool>();
}

double parse_angle(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        static const std::regex re(R"(\s*([0-9]*\.?[0-9]*(?:[eE][-+]?[0-9]+)?)\s*\*?\s*pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*)");
        std::smatch m;
        const std::string s = v.get<std::string>();
        if (std::regex_match(s, m, re)) {
            const double c = m[1].length() ? std::stod(m[1]) : 1.0;
            const double d = m[2].length() ? std::stod(m[2]) : 1.0;
            if (d > 0) return c * kPi / d;
        }
    }
    throw ConfigError("field '" + path + "' must be a number or an expression like \"pi/8\"");
}

double Node::angle(const std::string& key, double def) const { return has(key) ? parse_angle(at(key), field(key)) : def; }

std::vector<double> Node::numbers(const std::string& key, std::vector<double> def) const {
    if (!has(key)) return def;
    const json& a = at(key);
    if (!a.is_array()) throw ConfigError("field '" + field(key) + "' must be an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const json& v = a[i];
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_string() && (v == "inf" || v == "+inf")) {
            out.push_back(std::numeric_limits<double>::infinity());
        } else if (v.is_string() && v == "-inf") {
            out.push_back(-std::numeric_limits<double>::infinity());
        } else {
            throw ConfigError("field '" + field(key) + "/" + std::to_string(i) + "' must be a number or \"inf\"");
        }
    }
    return out;
}

BankSection parse_bank(const Node& root) {
    const Node b = root.sub("bank");
    BankSection s;
    s.input_rate_hz = b.number("input_rate_hz");
    if (!(s.input_rate_hz > 0)) throw ConfigError("field '" + b.field("input_rate_hz") + "' must be positive");
    s.K_syn = b.count("K_syn");
    s.I = b.count("I");
    if (b.has("ratio")) {
        s.ratio = b.count("ratio");
    } else {
        const double out_rate = b.number("output_rate_hz");
        const double r = out_rate / s.input_rate_hz;
        if (!(r >= 1) || r != std::floor(r))
            throw ConfigError("field '" + b.field("output_rate_hz") + "' must be an integer multiple of input_rate_hz");
        s.ratio = static_cast<std::size_t>(r);
    }
    if (s.ratio < 1 || s.I < 1 || s.K_syn % s.ratio != 0 || s.K_ana() % s.I != 0 || s.K_ana() / s.I < 1)
        throw ConfigError("bank: K_syn must be divisible by ratio, and K_syn/ratio by I");
    return s;
}

AnalysisSection parse_analysis(const Node& root, std::size_t K_ana) {
    const Node a = root.sub_or_empty("analysis");
    AnalysisSection s;
    s.num_taps = a.has("num_taps") ? a.count("num_taps") : 8 * K_ana + 1;
    if (a.has("cutoff_norm"))
        s.cutoff_norm = a.angle("cutoff_norm", 0.0);
    else
        s.cutoff_norm = a.angle("bandwidth_norm", 2.0 * kPi / static_cast<double>(K_ana)) / 2.0;
    s.kaiser_beta = a.number("kaiser_beta", 8.0);
    return s;
}

static Window parse_window(const Node& n, Window def) {
    if (!n.has("window")) return def;
    const std::string w = n.str("window");
    if (w == "rect") return Window::rect();
    if (w == "kaiser") return Window::kaiser(n.number("kaiser_beta", 8.0));
    throw ConfigError("field '" + n.field("window") + "' must be \"rect\" or \"kaiser\"");
}

SynthesisSection parse_synthesis(const Node& root, std::size_t K_syn, const fs::path& base) {
    const Node n = root.sub_or_empty("synthesis");
    SynthesisSection s;
    s.total_len = n.count("total_len", 253);
    if (n.has("cutoff_norm"))
        s.cutoff_norm = n.angle("cutoff_norm", 0.0);
    else
        s.cutoff_norm = n.angle("bandwidth_norm", 4.0 * kPi / static_cast<double>(K_syn)) / 2.0;
    s.window = parse_window(n, Window::kaiser(n.number("kaiser_beta", 8.0)));
    if (n.has("trained_filter")) s.trained_filter = (base / n.str("trained_filter")).string();
    return s;
}

RoutingOptions parse_routing(const Node& root) {
    const Node n = root.sub_or_empty("routing");
    RoutingOptions r;
    r.split_nyquist = n.flag("split_nyquist", r.split_nyquist);
    r.hilbert_half_len = n.count("hilbert_half_len", r.hilbert_half_len);
    r.hilbert_beta = n.number("hilbert_beta", r.hilbert_beta);
    return r;
}

WidebandSpec parse_wideband(const Node& root) {
    const Node w = root.sub("wideband");
    return WidebandSpec(w.number("sample_rate_hz"), w.count("K_syn"), w.count("I"));
}

std::vector<StreamEntry> parse_streams(const Node& root, const fs::path& base) {
    std::vector<StreamEntry> out;
    for (const Node& s : root.array("streams")) {
        StreamEntry e;
        e.name = s.str("name", "s" + std::to_string(out.size()));
        e.sample_rate_hz = s.number("sample_rate_hz");
        e.center_offset_hz = s.number("center_offset_hz", 0.0);
        e.scheme = parse_scheme(s.str("scheme", "zigbee"));
        if (s.has("input")) e.input = (base / s.str("input")).string();
        out.push_back(std::move(e));
    }
    return out;
}

Experiment load_experiment(const CliOptions& opt) {
    if (opt.config_path.empty()) throw ConfigError("missing option --config");
    Experiment ex;
    ex.doc = read_json_file(opt.config_path);
    if (!ex.doc.is_object()) throw ConfigError("config root must be a JSON object");
    ex.base = fs::path();
    const Node root = ex.root();
    ex.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(root.count("seed", 1));
    if (opt.command != "mux" && !opt.out.empty())
        ex.output_dir = opt.out;
    else
        ex.output_dir = root.str("output_dir", ".");
    return ex;
}

}  // namespace pfbmux::cli
