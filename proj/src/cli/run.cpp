// SPDX-License-Identifier: Apache-2.0
#include <ostream>

#include "CLI11.hpp"
#include "pfbmux/cli.hpp"
#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux::cli {

int run_command(const CliOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        if (opt.threads) {
            if (*opt.threads == 0) throw ConfigError("--threads must be at least 1");
            set_thread_count(*opt.threads);
        }
        const Experiment ex = load_experiment(opt);
        if (opt.command == "design")
            cmd_design(ex, opt, out);
        else if (opt.command == "train")
            cmd_train(ex, opt, out);
        else if (opt.command == "mux")
            cmd_mux(ex, opt, out);
        else if (opt.command == "eval")
            cmd_eval(ex, opt, out);
        else if (opt.command == "bench")
            cmd_bench(ex, opt, out);
        else
            throw ConfigError("unknown command '" + opt.command + "'");
        return kOk;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const PlanError& e) {
        err << "plan error: " << e.what() << '\n';
        return kConfig;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    } catch (const json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Polyphase filter-bank spectrum multiplexer", "pfbmux"};
    CliOptions opt;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    app.add_option("command", opt.command, "design | train | mux | eval | bench")
        ->required()
        ->check(CLI::IsMember({"design", "train", "mux", "eval", "bench"}));
    app.add_option("--config", opt.config_path, "experiment JSON")->required();
    app.add_option("--method", opt.method, "mux method")->check(CLI::IsMember({"nnpfb", "direct", "dft"}));
    app.add_option("--in", opt.inputs, "cf32 input per stream (mux)");
    app.add_option("--out", opt.out, "output file (mux) or directory");
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
    auto* thr_opt = app.add_option("--threads", threads, "worker threads (default PFBMUX_THREADS or 1)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kOk;
        }
        err << "usage error: " << e.what() << '\n' << app.help();
        return kConfig;
    }
    if (*seed_opt) opt.seed = seed;
    if (*thr_opt) opt.threads = threads;
    return run_command(opt, out, err);
}

}  // namespace pfbmux::cli
