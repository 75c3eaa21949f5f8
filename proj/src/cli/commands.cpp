// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "pfbmux/cli.hpp"
#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux::cli {

namespace fs = std::filesystem;

namespace {

json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::string fmt(double v, int digits = 10) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir.empty() ? fs::path(".") : dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::size_t integer_ratio(double num, double den, const std::string& what) {
    const double r = num / den;
    const double n = std::round(r);
    if (n < 1 || std::abs(r - n) > 1e-9 * n) throw ConfigError(what);
    return static_cast<std::size_t>(n);
}

struct SynthesisChoice {
    PrototypeFilter filter;
    std::optional<TrainedFilter> trained;
    std::string source;
};

SynthesisChoice resolve_synthesis(const Experiment& ex, const WidebandSpec& wb) {
    const SynthesisSection s = parse_synthesis(ex.root(), wb.K_syn, ex.base);
    SynthesisChoice c;
    if (!s.trained_filter.empty()) {
        TrainedFilter t = trained_filter_from_json(read_json_file(s.trained_filter));
        if (t.K != wb.K_syn || t.L != wb.L())
            throw ConfigError("trained filter '" + s.trained_filter + "' has K=" + std::to_string(t.K) + ", L=" +
                              std::to_string(t.L) + " but the wideband needs K=" + std::to_string(wb.K_syn) + ", L=" +
                              std::to_string(wb.L()));
        c.filter = t.synthesis.materialize();
        c.trained = std::move(t);
        c.source = s.trained_filter;
    } else {
        c.filter = design_windowed_sinc(s.cutoff_norm, s.total_len, s.window);
        c.source = "designed";
    }
    return c;
}

NnpfbBanks resolve_banks(const MuxPlan& plan, const SynthesisChoice& syn) {
    NnpfbBanks banks = make_nnpfb_banks(plan, syn.filter);
    if (syn.trained && syn.trained->analysis) {
        auto it = banks.analysis.find(syn.trained->analysis_K);
        if (it != banks.analysis.end()) it->second = syn.trained->analysis->materialize();
    }
    return banks;
}

DirectOptions parse_direct(const Node& root) {
    const Node n = root.sub_or_empty("direct");
    DirectOptions d;
    d.num_taps = n.count("num_taps", 0);
    d.kaiser_beta = n.number("kaiser_beta", d.kaiser_beta);
    d.cutoff_norm = n.angle("cutoff_norm", 0.0);
    return d;
}

std::size_t parse_dft_block(const Node& root) { return root.sub_or_empty("dft").count("block", 8); }

DemuxOptions parse_demux(const Node& root) {
    const Node n = root.sub_or_empty("demux");
    DemuxOptions d;
    d.num_taps = n.count("num_taps", d.num_taps);
    d.kaiser_beta = n.number("kaiser_beta", d.kaiser_beta);
    return d;
}

const std::vector<std::string> kMethods = {"nnpfb", "direct", "dft"};

std::vector<std::string> parse_methods(const Node& n, const std::string& key) {
    std::vector<std::string> out;
    if (!n.has(key)) return kMethods;
    const json& a = n.raw()[key];
    if (!a.is_array()) throw ConfigError("field '" + n.field(key) + "' must be an array");
    for (const auto& v : a) {
        if (!v.is_string() || std::find(kMethods.begin(), kMethods.end(), v.get<std::string>()) == kMethods.end())
            throw ConfigError("field '" + n.field(key) + "' entries must be \"nnpfb\", \"direct\" or \"dft\"");
        out.push_back(v.get<std::string>());
    }
    return out;
}

/// Everything needed to run any of the three multiplexers on one stream set.
struct MuxContext {
    WidebandSpec wb;
    PlanOptions popt;
    DirectOptions direct;
    std::size_t dft_block = 8;
    std::optional<SynthesisChoice> syn;
    std::optional<MuxPlan> plan;
    std::optional<NnpfbBanks> banks;

    MuxContext(const Experiment& ex, const std::vector<std::string>& methods) {
        const Node root = ex.root();
        wb = parse_wideband(root);
        popt.routing = parse_routing(root);
        popt.allow_overlap = root.flag("allow_overlap", false);
        direct = parse_direct(root);
        dft_block = parse_dft_block(root);
        if (std::find(methods.begin(), methods.end(), "nnpfb") != methods.end()) syn = resolve_synthesis(ex, wb);
    }

    void prepare(const std::vector<StreamSpec>& streams, const std::string& method) {
        if (method == "nnpfb" && !plan) {
            plan = plan_mux(streams, wb, popt);
            banks = resolve_banks(*plan, *syn);
        }
    }

    ComplexBuf run(const std::vector<StreamSpec>& streams, const std::string& method) {
        prepare(streams, method);
        if (method == "nnpfb") return mux_nnpfb(streams, *plan, *banks, wb);
        if (method == "direct") return mux_direct(streams, wb, direct);
        return mux_dft(streams, wb, dft_block);
    }
};

std::vector<StreamSpec> to_specs(const std::vector<StreamEntry>& entries, std::vector<ComplexBuf> payloads) {
    std::vector<StreamSpec> out;
    for (std::size_t i = 0; i < entries.size(); ++i)
        out.push_back({entries[i].name, entries[i].sample_rate_hz, entries[i].center_offset_hz, entries[i].scheme,
                       std::move(payloads[i])});
    return out;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
    std::ostringstream s;
    s << header << '\n';
    for (const auto& r : rows) s << r << '\n';
    write_text_file(path.string(), s.str());
}

std::vector<std::string> response_rows(const PrototypeFilter& f, std::size_t n) {
    std::vector<std::string> rows;
    for (const auto& [w, db] : freq_response(f, n)) rows.push_back(fmt(w, 12) + "," + fmt(db, 12));
    return rows;
}

}  // namespace

void cmd_design(const Experiment& ex, const CliOptions&, std::ostream& out) {
    const Node root = ex.root();
    const BankSection bank = parse_bank(root);
    const AnalysisSection a = parse_analysis(root, bank.K_ana());
    const SynthesisSection s = parse_synthesis(root, bank.K_syn, ex.base);
    const std::size_t n_points = root.sub_or_empty("design").count("response_points", 1024);

    DesignedFilter ha{"analysis", design_windowed_sinc(a.cutoff_norm, a.num_taps, Window::kaiser(a.kaiser_beta)),
                      bank.K_ana(), bank.M(), bank.I, Window::kaiser(a.kaiser_beta)};
    DesignedFilter fs_{"synthesis", design_windowed_sinc(s.cutoff_norm, s.total_len, s.window), bank.K_syn, bank.L(),
                       bank.I, s.window};

    const fs::path dir = prepare_dir(ex.output_dir);
    write_text_file((dir / "analysis_filter.json").string(), to_json(ha).dump(2) + "\n");
    write_text_file((dir / "synthesis_filter.json").string(), to_json(fs_).dump(2) + "\n");
    write_csv(dir / "analysis_response.csv", "omega,magnitude_db", response_rows(ha.filter, n_points));
    write_csv(dir / "synthesis_response.csv", "omega,magnitude_db", response_rows(fs_.filter, n_points));

    json summary;
    for (const DesignedFilter* d : {&ha, &fs_})
        summary[d->role] = {{"num_taps", d->filter.size()},
                            {"cutoff_norm", d->filter.cutoff_norm()},
                            {"bandwidth_norm", 2.0 * d->filter.cutoff_norm()},
                            {"K", d->K},
                            {"I", d->I}};
    summary["output_dir"] = dir.string();
    out << summary.dump(2) << '\n';
}

void cmd_train(const Experiment& ex, const CliOptions&, std::ostream& out) {
    const Node root = ex.root();
    const BankSection bank = parse_bank(root);
    const AnalysisSection a = parse_analysis(root, bank.K_ana());
    const SynthesisSection s = parse_synthesis(root, bank.K_syn, ex.base);
    const RoutingOptions routing = parse_routing(root);
    const Node t = root.sub("training");

    TrainConfig tc;
    tc.epochs = static_cast<int>(t.count("epochs", 200));
    if (tc.epochs < 1) throw ConfigError("field '" + t.field("epochs") + "' must be at least 1");
    tc.batch = t.count("batch", 0);
    tc.seed = ex.seed;
    tc.train_analysis = t.flag("train_analysis", false);
    const Node o = t.sub_or_empty("optimizer");
    const std::string kind = o.str("type", "adam");
    if (kind == "adam")
        tc.optimizer.kind = OptimizerConfig::Kind::Adam;
    else if (kind == "sgd")
        tc.optimizer.kind = OptimizerConfig::Kind::Sgd;
    else if (kind == "line_search")
        tc.optimizer.kind = OptimizerConfig::Kind::LineSearch;
    else
        throw ConfigError("field '" + o.field("type") + "' must be \"adam\", \"sgd\" or \"line_search\"");
    tc.optimizer.lr = o.number("lr", tc.optimizer.lr);
    tc.optimizer.beta1 = o.number("beta1", tc.optimizer.beta1);
    tc.optimizer.beta2 = o.number("beta2", tc.optimizer.beta2);
    tc.optimizer.eps = o.number("eps", tc.optimizer.eps);

    const Node mx = t.sub_or_empty("mixture");
    PairMixture mix;
    mix.qpsk = mx.count("qpsk", mix.qpsk);
    mix.zigbee = mx.count("zigbee", mix.zigbee);
    mix.gmsk = mx.count("gmsk", mix.gmsk);
    const Node pn = t.sub_or_empty("pairs");
    PairOptions popt;
    popt.n_symbols = pn.count("n_symbols", popt.n_symbols);
    popt.qpsk_sps = pn.count("qpsk_sps", popt.qpsk_sps);
    popt.qpsk_rolloff = pn.number("qpsk_rolloff", popt.qpsk_rolloff);
    popt.gmsk_bt = pn.number("gmsk_bt", popt.gmsk_bt);
    const std::size_t holdout = t.count("holdout", 5);

    AnalysisBankConfig acfg(bank.K_ana(), bank.M(),
                            design_windowed_sinc(a.cutoff_norm, a.num_taps, Window::kaiser(a.kaiser_beta)));
    const std::string init = t.str("init", "model_driven");
    LearnableSynthesisFilter f0;
    if (init == "model_driven") {
        const Node tn = t;
        Window w = Window::rect();
        if (tn.has("init_window")) {
            const std::string wn = tn.str("init_window");
            if (wn == "kaiser")
                w = Window::kaiser(tn.number("init_kaiser_beta", 8.0));
            else if (wn != "rect")
                throw ConfigError("field '" + tn.field("init_window") + "' must be \"rect\" or \"kaiser\"");
        }
        f0 = init_model_driven(bank.K_syn, bank.L(), s.cutoff_norm, s.total_len, w);
    } else if (init == "normal") {
        f0 = init_random_normal(s.total_len, mix_seed(ex.seed, 17), s.cutoff_norm);
    } else {
        throw ConfigError("field '" + t.field("init") + "' must be \"model_driven\" or \"normal\"");
    }
    CascadeModel model = make_cascade_model(acfg, {bank.K_syn, bank.L()}, f0, routing);

    const auto pairs = make_training_mixture(mix, bank.input_rate_hz, bank.ratio, ex.seed, popt);
    if (pairs.empty()) throw ConfigError("field '" + t.field("mixture") + "' selects no training pairs");
    const TrainResult res = train(pairs, tc, model);

    CascadeModel trained = model;
    trained.synthesis = res.synthesis;
    if (res.analysis) trained.analysis = AnalysisBankConfig(bank.K_ana(), bank.M(), res.analysis->materialize());

    json heldout = json::object(), heldout_init = json::object();
    const std::pair<Scheme, std::size_t> schemes[] = {
        {Scheme::Qpsk, mix.qpsk}, {Scheme::ZigbeeOqpsk, mix.zigbee}, {Scheme::Gmsk, mix.gmsk}};
    for (const auto& [sc, n] : schemes) {
        if (n == 0 || holdout == 0) continue;
        const auto test = make_training_pairs(sc, holdout, bank.input_rate_hz, bank.ratio, mix_seed(ex.seed, 7919), popt);
        double acc = 0.0, acc0 = 0.0;
        for (const auto& p : test) {
            acc += pair_nmse_db(p, trained);
            acc0 += pair_nmse_db(p, model);
        }
        heldout[scheme_name(sc)] = num(acc / static_cast<double>(test.size()));
        heldout_init[scheme_name(sc)] = num(acc0 / static_cast<double>(test.size()));
    }

    TrainedFilter tf;
    tf.synthesis = res.synthesis;
    tf.K = bank.K_syn;
    tf.L = bank.L();
    tf.I = bank.I;
    tf.seed = ex.seed;
    tf.epochs = tc.epochs;
    tf.final_loss = res.final_loss;
    if (res.analysis) {
        tf.analysis = res.analysis;
        tf.analysis_K = bank.K_ana();
        tf.analysis_M = bank.M();
    }

    const fs::path dir = prepare_dir(ex.output_dir);
    write_text_file((dir / "trained_filter.json").string(), to_json(tf).dump(2) + "\n");
    std::vector<std::string> rows;
    for (std::size_t e = 0; e < res.loss_curve.size(); ++e) rows.push_back(std::to_string(e) + "," + fmt(res.loss_curve[e], 17));
    write_csv(dir / "loss_curve.csv", "epoch,loss", rows);

    json report = {{"epochs", tc.epochs},
                   {"pairs", pairs.size()},
                   {"parameter_count", res.synthesis.parameter_count()},
                   {"lag", model.lag()},
                   {"initial_loss", num(res.loss_curve.front())},
                   {"final_loss", num(res.final_loss)},
                   {"heldout_nmse_db", heldout},
                   {"init_heldout_nmse_db", heldout_init}};
    write_text_file((dir / "train_report.json").string(), report.dump(2) + "\n");
    out << report.dump(2) << '\n';
}

void cmd_mux(const Experiment& ex, const CliOptions& opt, std::ostream& out) {
    const Node root = ex.root();
    const std::string method = opt.method.empty() ? root.str("method", "nnpfb") : opt.method;
    if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end())
        throw ConfigError("unknown method '" + method + "' (expected nnpfb, direct or dft)");
    const auto entries = parse_streams(root, ex.base);
    std::vector<std::string> inputs = opt.inputs;
    if (inputs.empty())
        for (const auto& e : entries) {
            if (e.input.empty()) throw ConfigError("missing field '/streams/*/input' and no --in files given");
            inputs.push_back(e.input);
        }
    if (inputs.size() != entries.size())
        throw ConfigError(std::to_string(inputs.size()) + " input files for " + std::to_string(entries.size()) +
                          " streams");

    std::vector<ComplexBuf> payloads;
    for (std::size_t i = 0; i < inputs.size(); ++i) payloads.emplace_back(read_cf32(inputs[i]), entries[i].sample_rate_hz);
    const auto streams = to_specs(entries, std::move(payloads));

    MuxContext ctx(ex, {method});
    const ComplexBuf y = ctx.run(streams, method);

    json gain = json::object(), plan;
    long delay = 0;
    if (method == "nnpfb") {
        plan = to_json(*ctx.plan);
        delay = nnpfb_delay(*ctx.plan, *ctx.banks);
        const SynthesisBankConfig scfg(ctx.wb.K_syn, ctx.wb.L(), ctx.banks->synthesis);
        for (const auto& sp : ctx.plan->streams) {
            const AnalysisBankConfig acfg(sp.K_ana, sp.M_ana, ctx.banks->analysis.at(sp.K_ana));
            gain[sp.name] = 1.0 / cascade_gain(acfg, scfg, ctx.popt.routing);
        }
        plan["synthesis_source"] = ctx.syn->source;
    } else if (method == "direct") {
        plan = json::object();
        plan["streams"] = json::array();
        for (const auto& s : streams) {
            const std::size_t r = integer_ratio(ctx.wb.sample_rate_hz, s.sample_rate_hz,
                                                "wideband rate is not an integer multiple of '" + s.name + "'");
            const std::size_t taps = ctx.direct.num_taps ? ctx.direct.num_taps : 32 * r + 1;
            plan["streams"].push_back({{"name", s.name}, {"ratio", r}, {"num_taps", taps},
                                       {"center_offset_hz", s.center_offset_hz}});
            gain[s.name] = static_cast<double>(r);
            delay = std::max(delay, static_cast<long>((taps - 1) / 2));
        }
    } else {
        const DftMuxLayout layout = plan_dft_mux(streams, ctx.wb, ctx.dft_block);
        plan = to_json(layout);
        for (const auto& s : streams)
            gain[s.name] = static_cast<double>(layout.idft_size) / static_cast<double>(ctx.dft_block);
    }

    const std::string path =
        !opt.out.empty() ? opt.out
                         : (root.has("output") ? (ex.base / root.str("output")).string()
                                               : (prepare_dir(ex.output_dir) / ("mux_" + method + ".cf32")).string());
    write_cf32(path, y.samples());

    json summary = {{"method", method},
                    {"output", path},
                    {"samples_out", y.size()},
                    {"sample_rate_hz", ctx.wb.sample_rate_hz},
                    {"delay_samples", delay},
                    {"gain", gain},
                    {"plan", plan}};
    out << summary.dump(2) << '\n';
}

namespace {

struct Payload {
    ComplexBuf signal;
    std::optional<SymbolStream> qpsk;
};

struct PayloadOptions {
    std::string kind = "stream";
    std::size_t n_symbols = 4096;
    std::size_t n_bits = 1024;
    std::size_t qpsk_sps = 2;
    double qpsk_rolloff = 0.75;
    double gmsk_bt = 0.5;
};

PayloadOptions parse_payload(const Node& n) {
    PayloadOptions p;
    p.kind = n.str("payload", p.kind);
    p.n_symbols = n.count("n_symbols", p.n_symbols);
    p.n_bits = n.count("n_bits", p.n_bits);
    p.qpsk_sps = n.count("qpsk_sps", p.qpsk_sps);
    p.qpsk_rolloff = n.number("qpsk_rolloff", p.qpsk_rolloff);
    p.gmsk_bt = n.number("gmsk_bt", p.gmsk_bt);
    return p;
}

Payload make_payload(const StreamEntry& e, const PayloadOptions& p, std::uint64_t seed) {
    const Scheme sc = p.kind == "stream" ? e.scheme : parse_scheme(p.kind);
    switch (sc) {
        case Scheme::Qpsk: {
            auto [sym, x] = gen_qpsk(p.n_symbols, p.qpsk_sps, p.qpsk_rolloff, seed, e.sample_rate_hz);
            return {std::move(x), std::move(sym)};
        }
        case Scheme::ZigbeeOqpsk: {
            const std::size_t sps = integer_ratio(e.sample_rate_hz, kZigbeeChipRate,
                                                  "stream '" + e.name + "': rate must be a multiple of 2 MHz for ZigBee");
            return {gen_zigbee_oqpsk(p.n_bits, sps, seed, e.sample_rate_hz), std::nullopt};
        }
        case Scheme::Gmsk: {
            const std::size_t sps = integer_ratio(e.sample_rate_hz, kBleBitRate,
                                                  "stream '" + e.name + "': rate must be a multiple of 1 MHz for GMSK");
            return {gen_gmsk(p.n_bits, sps, p.gmsk_bt, seed, e.sample_rate_hz), std::nullopt};
        }
    }
    throw ConfigError("unsupported scheme");
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] + frac * (v[i + 1] - v[i]) : v[i];
}

}  // namespace

void cmd_eval(const Experiment& ex, const CliOptions&, std::ostream& out) {
    const Node root = ex.root();
    const Node ev = root.sub_or_empty("evaluation");
    const auto entries = parse_streams(root, ex.base);
    const PayloadOptions popt = parse_payload(ev);
    const std::vector<std::string> methods = parse_methods(ev, "methods");
    const std::vector<double> snrs = ev.numbers("snr_db", {std::numeric_limits<double>::infinity()});
    const double ber_target = ev.number("ber_target", 1e-3);
    const DemuxOptions dmx = parse_demux(root);

    std::vector<Payload> payloads;
    std::vector<ComplexBuf> signals;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        payloads.push_back(make_payload(entries[i], popt, mix_seed(ex.seed, i)));
        signals.push_back(payloads.back().signal);
    }
    const auto streams = to_specs(entries, std::move(signals));
    MuxContext ctx(ex, methods);
    const long max_lag =
        static_cast<long>(ev.count("max_lag", ctx.syn ? ctx.syn->filter.size() : 32 * ctx.wb.K_syn + 1));
    const std::uint64_t noise_seed = mix_seed(ex.seed, 0xa11ce);

    std::vector<std::string> rows;
    json summary = {{"methods", json::object()}};
    for (const auto& method : methods) {
        const ComplexBuf y = ctx.run(streams, method);
        const ComplexBuf n0(complex_gaussian(y.size(), 1.0, noise_seed), ctx.wb.sample_rate_hz);
        json ms = {{"samples_out", y.size()}, {"streams", json::object()}};
        std::vector<double> ber_sum(snrs.size(), 0.0);
        std::size_t n_ber = 0;
        double nmse_sum = 0.0;
        for (std::size_t s = 0; s < streams.size(); ++s) {
            const ComplexBuf z = demux_reference(y, streams[s], ctx.wb, dmx);
            const ComplexBuf w = demux_reference(n0, streams[s], ctx.wb, dmx);
            const double p_sig = streams[s].payload.mean_power(), p_noise = w.mean_power();
            const std::size_t sps = popt.qpsk_sps;
            const double clean = nmse_db(z, streams[s].payload, max_lag);
            nmse_sum += clean;
            json ss = {{"nmse_db_noiseless", num(clean)}, {"nmse_db", json::array()}, {"ber", json::array()}};
            for (std::size_t k = 0; k < snrs.size(); ++k) {
                const double snr = snrs[k];
                const double sigma =
                    std::isinf(snr) && snr > 0 ? 0.0 : std::sqrt(p_sig / (std::pow(10.0, snr / 10.0) * p_noise));
                std::vector<cplx> rx(z.samples());
                for (std::size_t i = 0; i < rx.size() && i < w.size(); ++i) rx[i] += sigma * w[i];
                const ComplexBuf rxb(std::move(rx), z.sample_rate_hz());
                const double nm = nmse_db(rxb, streams[s].payload, max_lag);
                std::string ber_field;
                ss["nmse_db"].push_back(num(nm));
                if (payloads[s].qpsk) {
                    const double b = qpsk_ber(rxb, *payloads[s].qpsk, sps, popt.qpsk_rolloff);
                    ber_sum[k] += b;
                    ss["ber"].push_back(b);
                    ber_field = fmt(b, 8);
                }
                rows.push_back(fmt(snr) + "," + method + "," + streams[s].name + "," + fmt(nm, 8) + "," + ber_field);
            }
            if (payloads[s].qpsk) ++n_ber;
            ms["streams"][streams[s].name] = ss;
        }
        ms["mean_nmse_db_noiseless"] = num(nmse_sum / static_cast<double>(std::max<std::size_t>(1, streams.size())));
        if (n_ber > 0) {
            std::vector<std::pair<double, double>> curve;
            for (std::size_t k = 0; k < snrs.size(); ++k)
                if (std::isfinite(snrs[k])) curve.push_back({snrs[k], ber_sum[k] / static_cast<double>(n_ber)});
            std::sort(curve.begin(), curve.end());
            std::vector<double> xs, bs;
            for (const auto& [x, b] : curve) {
                xs.push_back(x);
                bs.push_back(b);
            }
            ms["mean_ber"] = bs;
            ms["snr_db_at_ber_target"] = num(snr_at_ber(xs, bs, ber_target));
        }
        summary["methods"][method] = ms;
    }
    json snr_json = json::array();
    for (double s : snrs) snr_json.push_back(num(s));
    summary["snr_db"] = snr_json;
    summary["ber_target"] = ber_target;

    const fs::path dir = prepare_dir(ex.output_dir);
    write_csv(dir / "eval.csv", "snr_db,method,stream,nmse_db,ber", rows);
    write_text_file((dir / "eval.json").string(), summary.dump(2) + "\n");
    out << summary.dump(2) << '\n';
}

void cmd_bench(const Experiment& ex, const CliOptions& opt, std::ostream& out) {
    const Node root = ex.root();
    const Node b = root.sub_or_empty("bench");
    const std::size_t reps = b.count("repetitions", 10);
    if (reps < 10) throw ConfigError("field '" + b.field("repetitions") + "' must be at least 10");
    const std::vector<double> sizes_d = b.numbers("sizes", {16, 32, 64, 128});
    const std::size_t packets = b.count("packets", 8);
    const std::vector<std::string> methods = parse_methods(b, "methods");
    const std::size_t threads = opt.threads ? *opt.threads : b.count("threads", 1);
    const auto entries = parse_streams(root, ex.base);

    const std::size_t saved_threads = thread_count();
    set_thread_count(threads);
    struct Restore {
        std::size_t n;
        ~Restore() { set_thread_count(n); }
    } restore{saved_threads};

    MuxContext ctx(ex, methods);
    std::vector<std::string> rows;
    json table = json::array();
    for (double sd : sizes_d) {
        if (!(sd >= 1) || sd != std::floor(sd)) throw ConfigError("field '" + b.field("sizes") + "' must hold positive integers");
        const std::size_t size = static_cast<std::size_t>(sd);
        PayloadOptions popt;
        popt.n_bits = 8 * size * packets;
        popt.n_symbols = 4 * size * packets;
        std::vector<ComplexBuf> signals;
        std::size_t n_in = 0;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            signals.push_back(make_payload(entries[i], popt, mix_seed(ex.seed, i)).signal);
            n_in += signals.back().size();
        }
        const auto streams = to_specs(entries, std::move(signals));
        for (const auto& method : methods) {
            ctx.prepare(streams, method);
            std::size_t n_out = ctx.run(streams, method).size();
            std::vector<double> ms;
            for (std::size_t r = 0; r < reps; ++r) {
                const auto t0 = std::chrono::steady_clock::now();
                n_out = ctx.run(streams, method).size();
                ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
            }
            const double med = percentile(ms, 0.5), p25 = percentile(ms, 0.25), p75 = percentile(ms, 0.75);
            const double mn = *std::min_element(ms.begin(), ms.end());
            rows.push_back(method + "," + std::to_string(size) + "," + std::to_string(n_in) + "," + std::to_string(n_out) +
                           "," + std::to_string(reps) + "," + std::to_string(threads) + "," + fmt(med, 6) + "," +
                           fmt(p25, 6) + "," + fmt(p75, 6) + "," + fmt(p75 - p25, 6) + "," + fmt(mn, 6));
            table.push_back({{"method", method},
                             {"size_bytes", size},
                             {"samples_in", n_in},
                             {"samples_out", n_out},
                             {"repetitions", reps},
                             {"median_ms", med},
                             {"p25_ms", p25},
                             {"p75_ms", p75},
                             {"iqr_ms", p75 - p25}});
        }
    }
    const fs::path dir = prepare_dir(ex.output_dir);
    write_csv(dir / "bench.csv", "method,size_bytes,samples_in,samples_out,reps,threads,median_ms,p25_ms,p75_ms,iqr_ms,min_ms",
              rows);
    out << json({{"threads", threads}, {"rows", table}}).dump(2) << '\n';
}

}  // namespace pfbmux::cli
