// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pfbmux/io.hpp"
#include "pfbmux/learn.hpp"
#include "pfbmux/mux.hpp"

namespace pfbmux::cli {

enum ExitCode : int { kOk = 0, kConfig = 2, kNumeric = 3, kIo = 4 };

struct CliOptions {
    std::string command;  // design | train | mux | eval | bench
    std::string config_path;
    std::string method;  // mux: nnpfb | direct | dft
    std::vector<std::string> inputs;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
};

/// Read-only view of a JSON object that knows its path for error messages.
/// Missing or mistyped fields throw ConfigError naming the JSON pointer.
class Node {
public:
    Node(const json& j, std::string path);

    const std::string& path() const { return path_; }
    std::string field(const std::string& key) const { return path_ + "/" + key; }
    bool has(const std::string& key) const;
    const json& raw() const { return *j_; }

    Node sub(const std::string& key) const;
    /// Empty object when absent.
    Node sub_or_empty(const std::string& key) const;
    std::vector<Node> array(const std::string& key) const;

    double number(const std::string& key) const;
    double number(const std::string& key, double def) const;
    std::size_t count(const std::string& key) const;
    std::size_t count(const std::string& key, std::size_t def) const;
    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& def) const;
    bool flag(const std::string& key, bool def) const;
    /// Radians per sample: a number or "pi", "pi/8", "0.25pi", "3*pi/4".
    double angle(const std::string& key, double def) const;
    /// Numbers, or "inf" / "-inf" strings.
    std::vector<double> numbers(const std::string& key, std::vector<double> def) const;

private:
    const json& at(const std::string& key) const;
    const json* j_;
    std::string path_;
};

double parse_angle(const json& v, const std::string& path);

/// Single-stream cascade geometry used by design and train.
struct BankSection {
    double input_rate_hz = 1.0;
    std::size_t ratio = 1;
    std::size_t K_syn = 1;
    std::size_t I = 1;

    std::size_t K_ana() const { return K_syn / ratio; }
    std::size_t M() const { return K_ana() / I; }
    std::size_t L() const { return K_syn / I; }
};
BankSection parse_bank(const Node& root);

struct AnalysisSection {
    std::size_t num_taps = 0;
    double cutoff_norm = 0.0;
    double kaiser_beta = 8.0;
};
/// Defaults: 8K+1 taps, cutoff pi/K.
AnalysisSection parse_analysis(const Node& root, std::size_t K_ana);

struct SynthesisSection {
    std::size_t total_len = 253;
    double cutoff_norm = 0.0;
    Window window = Window::kaiser(8.0);
    std::string trained_filter;  // resolved path, empty if none
};
/// Defaults: 253 taps, cutoff 2pi/K, Kaiser(8).
SynthesisSection parse_synthesis(const Node& root, std::size_t K_syn, const std::filesystem::path& base);

RoutingOptions parse_routing(const Node& root);
WidebandSpec parse_wideband(const Node& root);

struct StreamEntry {
    std::string name;
    double sample_rate_hz = 1.0;
    double center_offset_hz = 0.0;
    Scheme scheme = Scheme::ZigbeeOqpsk;
    std::string input;  // optional cf32 path
};
std::vector<StreamEntry> parse_streams(const Node& root, const std::filesystem::path& base);

/// Config file plus resolved seed and output directory.
struct Experiment {
    json doc;
    /// Relative paths in the config resolve against this (the working directory).
    std::filesystem::path base;
    std::filesystem::path output_dir;
    std::uint64_t seed = 1;

    Node root() const { return Node(doc, ""); }
};
Experiment load_experiment(const CliOptions& opt);

/// Parses argv with CLI11 and dispatches. Returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
/// Runs one command, mapping exceptions to exit codes and messages on err.
int run_command(const CliOptions& opt, std::ostream& out, std::ostream& err);

void cmd_design(const Experiment& ex, const CliOptions& opt, std::ostream& out);
void cmd_train(const Experiment& ex, const CliOptions& opt, std::ostream& out);
void cmd_mux(const Experiment& ex, const CliOptions& opt, std::ostream& out);
void cmd_eval(const Experiment& ex, const CliOptions& opt, std::ostream& out);
void cmd_bench(const Experiment& ex, const CliOptions& opt, std::ostream& out);

}  // namespace pfbmux::cli
