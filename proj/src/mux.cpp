// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/mux.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "pfbmux/errors.hpp"
#include "pfbmux/multirate.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux {

WidebandSpec::WidebandSpec(double rate, std::size_t K, std::size_t I_) : sample_rate_hz(rate), K_syn(K), I(I_) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("wideband: sample rate must be positive");
    if (K == 0 || I == 0 || K % I != 0) throw ConfigError("wideband: K_syn must be a positive multiple of I");
}

namespace {

bool as_integer(double v, long& out) {
    double r = std::round(v);
    if (std::abs(v - r) > 1e-9 * std::max(1.0, std::abs(v))) return false;
    out = static_cast<long>(r);
    return true;
}

std::string label(const StreamSpec& s, std::size_t i) {
    return s.name.empty() ? "stream " + std::to_string(i) : "'" + s.name + "'";
}

void check_fits(const StreamSpec& s, std::size_t i, const WidebandSpec& wb) {
    if (!(s.sample_rate_hz > 0.0)) throw PlanError(label(s, i) + ": sample rate must be positive");
    if (s.payload.sample_rate_hz() != s.sample_rate_hz && !s.payload.empty())
        throw PlanError(label(s, i) + ": payload rate differs from the stream rate");
    if (std::abs(s.center_offset_hz) + s.sample_rate_hz / 2.0 > wb.sample_rate_hz / 2.0 * (1.0 + 1e-12))
        throw PlanError(label(s, i) + ": stream does not fit inside the wideband");
}

std::size_t integer_ratio(const StreamSpec& s, std::size_t i, const WidebandSpec& wb) {
    long r = 0;
    if (!as_integer(wb.sample_rate_hz / s.sample_rate_hz, r) || r < 1)
        throw PlanError(label(s, i) + ": wideband rate is not an integer multiple of the stream rate");
    return static_cast<std::size_t>(r);
}

std::size_t output_length(const std::vector<StreamSpec>& streams, const std::vector<std::size_t>& ratios) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < streams.size(); ++i) n = std::max(n, streams[i].payload.size() * ratios[i]);
    return n;
}

}  // namespace

std::vector<cplx> mixer(std::size_t n, double f_hz, double fs_hz) {
    const long double p = static_cast<long double>(f_hz) / static_cast<long double>(fs_hz);
    std::vector<cplx> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double frac = p * static_cast<long double>(i);
        frac -= std::floor(frac);
        const double a = 2.0 * kPi * static_cast<double>(frac);
        w[i] = {std::cos(a), std::sin(a)};
    }
    return w;
}

MuxPlan plan_mux(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, const PlanOptions& opt) {
    MuxPlan plan{wb, opt.routing, opt.allow_overlap, {}};
    const double interval = wb.subband_interval_hz();
    std::map<std::size_t, std::vector<std::size_t>> owners;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        const StreamSpec& s = streams[i];
        check_fits(s, i, wb);
        long k = 0;
        if (!as_integer(s.sample_rate_hz / interval, k) || k < 1)
            throw PlanError(label(s, i) + ": rate not divisible by the subband interval");
        const std::size_t K = static_cast<std::size_t>(k);
        if (K % wb.I != 0) throw PlanError(label(s, i) + ": K_ana is not a multiple of the oversampling ratio");
        if (wb.K_syn % K != 0) throw PlanError(label(s, i) + ": K_syn is not a multiple of K_ana");
        long shift = 0;
        if (!as_integer(s.center_offset_hz / interval, shift))
            throw PlanError(label(s, i) + ": offset not grid-aligned");
        StreamPlan sp;
        sp.name = s.name;
        sp.sample_rate_hz = s.sample_rate_hz;
        sp.K_ana = K;
        sp.M_ana = K / wb.I;
        sp.ratio = wb.K_syn / K;
        sp.shift = shift;
        const SubbandRouter router(K, wb.K_syn, shift, 0.0, opt.routing);
        for (std::size_t r = 0; r < K; ++r) {
            long kt = static_cast<long>(r) < static_cast<long>(K + 1) / 2 ? static_cast<long>(r)
                                                                            : static_cast<long>(r) - static_cast<long>(K);
            long ks = static_cast<long>(wb.K_syn);
            sp.bin_map.push_back(static_cast<std::size_t>((((kt + shift) % ks) + ks) % ks));
        }
        sp.bins = router.occupied_bins();
        for (std::size_t b : sp.bins) owners[b].push_back(i);
        plan.streams.push_back(std::move(sp));
    }
    if (!opt.allow_overlap) {
        std::set<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<std::size_t> bins;
        for (const auto& [b, who] : owners)
            if (who.size() > 1) {
                bins.push_back(b);
                for (std::size_t a = 0; a < who.size(); ++a)
                    for (std::size_t c = a + 1; c < who.size(); ++c) pairs.insert({who[a], who[c]});
            }
        if (!pairs.empty()) {
            std::ostringstream os;
            os << "bin collision between streams";
            bool first = true;
            for (const auto& [a, c] : pairs) {
                os << (first ? " " : ", ") << label(streams[a], a) << " and " << label(streams[c], c);
                first = false;
            }
            os << " (bins";
            for (std::size_t b : bins) os << ' ' << b;
            os << ')';
            throw PlanError(os.str());
        }
    }
    return plan;
}

NnpfbBanks make_nnpfb_banks(const MuxPlan& plan, const PrototypeFilter& synthesis) {
    NnpfbBanks b{{}, synthesis};
    for (const auto& s : plan.streams)
        if (!b.analysis.count(s.K_ana)) b.analysis.emplace(s.K_ana, default_analysis_prototype(s.K_ana));
    return b;
}

namespace {

struct StreamGeometry {
    AnalysisBankConfig acfg;
    long delay = 0;  // without routing padding
    std::size_t frame_delay = 0;
};

struct NnpfbGeometry {
    SynthesisBankConfig scfg;
    std::vector<StreamGeometry> streams;
    long delay = 0;
};

NnpfbGeometry nnpfb_geometry(const MuxPlan& plan, const NnpfbBanks& banks) {
    const WidebandSpec& wb = plan.wideband;
    NnpfbGeometry g{SynthesisBankConfig(wb.K_syn, wb.L(), banks.synthesis), {}, 0};
    if (banks.synthesis.size() % 2 == 0) throw ConfigError("mux: synthesis prototype must have odd length");
    const long cf = static_cast<long>(banks.synthesis.size() / 2);
    for (const auto& sp : plan.streams) {
        auto it = banks.analysis.find(sp.K_ana);
        if (it == banks.analysis.end())
            throw ConfigError("mux: no analysis prototype for K_ana = " + std::to_string(sp.K_ana));
        if (it->second.size() % 2 == 0) throw ConfigError("mux: analysis prototypes must have odd length");
        StreamGeometry s{AnalysisBankConfig(sp.K_ana, sp.M_ana, it->second), 0, 0};
        s.frame_delay = SubbandRouter(sp.K_ana, wb.K_syn, sp.shift, 0.0, plan.routing).frame_delay();
        s.delay = static_cast<long>(it->second.size() / 2 * sp.ratio + s.frame_delay * wb.L()) + cf;
        g.delay = std::max(g.delay, s.delay);
        g.streams.push_back(std::move(s));
    }
    for (const auto& s : g.streams)
        if ((g.delay - s.delay) % static_cast<long>(wb.L()) != 0)
            throw ConfigError("mux: stream delays differ by a non-multiple of L; adjust analysis prototype lengths");
    return g;
}

}  // namespace

long nnpfb_delay(const MuxPlan& plan, const NnpfbBanks& banks) { return nnpfb_geometry(plan, banks).delay; }

ComplexBuf mux_nnpfb(const std::vector<StreamSpec>& streams, const MuxPlan& plan, const NnpfbBanks& banks,
                     const WidebandSpec& wb) {
    if (streams.size() != plan.streams.size()) throw PlanError("mux: plan and stream list differ in size");
    if (wb.sample_rate_hz != plan.wideband.sample_rate_hz || wb.K_syn != plan.wideband.K_syn || wb.I != plan.wideband.I)
        throw PlanError("mux: plan was made for a different wideband");
    std::vector<std::size_t> ratios;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        if (streams[i].sample_rate_hz != plan.streams[i].sample_rate_hz)
            throw PlanError(label(streams[i], i) + ": rate differs from the plan");
        ratios.push_back(plan.streams[i].ratio);
    }
    const std::size_t n_out = output_length(streams, ratios);
    if (n_out == 0) return ComplexBuf({}, wb.sample_rate_hz);

    const NnpfbGeometry geo = nnpfb_geometry(plan, banks);
    const double interval = wb.subband_interval_hz();
    const double sub_rate = interval * static_cast<double>(wb.I);

    std::map<std::size_t, double> gains;
    for (const auto& s : geo.streams)
        if (!gains.count(s.acfg.K)) gains[s.acfg.K] = cascade_gain(s.acfg, geo.scfg, plan.routing);

    std::vector<SubbandFrame> frames(streams.size());
    parallel_for(streams.size(), [&](std::size_t i) { frames[i] = afb_polyphase(streams[i].payload, geo.streams[i].acfg); });

    std::vector<std::size_t> pads(streams.size());
    std::size_t T = 0;
    std::vector<SubbandRouter> routers;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        const auto& sp = plan.streams[i];
        routers.emplace_back(sp.K_ana, wb.K_syn, sp.shift, static_cast<double>(geo.delay), plan.routing);
        pads[i] = static_cast<std::size_t>((geo.delay - geo.streams[i].delay) / static_cast<long>(wb.L()));
        if (frames[i].T() > 0) T = std::max(T, routers[i].output_frames(frames[i].T()) + pads[i]);
    }
    // frames must reach past the trim point even for short inputs
    const std::size_t need = (n_out + static_cast<std::size_t>(geo.delay)) / wb.L() + 1;
    Matrix<cplx> S(wb.K_syn, std::max(T, need));
    for (std::size_t i = 0; i < streams.size(); ++i) {
        if (frames[i].T() == 0) continue;
        routers[i].accumulate(frames[i].data, S, 1.0 / gains[geo.streams[i].acfg.K], pads[i]);
    }
    const ComplexBuf y = sfb_polyphase(SubbandFrame(std::move(S), sub_rate, interval), geo.scfg);
    std::vector<cplx> out(n_out);
    for (std::size_t n = 0; n < n_out; ++n) {
        const std::size_t j = n + static_cast<std::size_t>(geo.delay);
        if (j < y.size()) out[n] = y[j];
    }
    return ComplexBuf(std::move(out), wb.sample_rate_hz);
}

ComplexBuf mux_direct(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, const DirectOptions& opt) {
    std::vector<std::size_t> ratios;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        check_fits(streams[i], i, wb);
        ratios.push_back(integer_ratio(streams[i], i, wb));
    }
    const std::size_t n_out = output_length(streams, ratios);
    std::vector<std::vector<cplx>> parts(streams.size());
    parallel_for(streams.size(), [&](std::size_t i) {
        const StreamSpec& s = streams[i];
        if (s.payload.empty()) return;
        const std::size_t r = ratios[i];
        const std::size_t taps = opt.num_taps ? opt.num_taps : 32 * r + 1;
        const double cutoff = opt.cutoff_norm > 0.0 ? opt.cutoff_norm : kPi / static_cast<double>(r);
        const PrototypeFilter g =
            design_windowed_sinc(cutoff, taps, Window::kaiser(opt.kaiser_beta)).scaled(static_cast<double>(r));
        const ComplexBuf y = interpolate(s.payload, r, g);
        const std::size_t c = taps / 2;
        const auto w = mixer(n_out, s.center_offset_hz, wb.sample_rate_hz);
        std::vector<cplx> z(n_out);
        for (std::size_t n = 0; n < n_out && n + c < y.size(); ++n) z[n] = y[n + c] * w[n];
        parts[i] = std::move(z);
    });
    std::vector<cplx> out(n_out);
    for (const auto& p : parts)
        for (std::size_t n = 0; n < p.size(); ++n) out[n] += p[n];
    return ComplexBuf(std::move(out), wb.sample_rate_hz);
}

DftMuxLayout plan_dft_mux(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, std::size_t dft_block) {
    if (dft_block == 0) throw ConfigError("dft mux: block size must be positive");
    DftMuxLayout lay;
    if (streams.empty()) return lay;
    lay.resolution_hz = streams[0].sample_rate_hz / static_cast<double>(dft_block);
    long n = 0;
    if (!as_integer(wb.sample_rate_hz / lay.resolution_hz, n) || n < 1)
        throw PlanError("dft mux: wideband rate is not a multiple of the DFT resolution");
    lay.idft_size = static_cast<std::size_t>(n);
    std::set<std::size_t> used;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        const StreamSpec& s = streams[i];
        check_fits(s, i, wb);
        integer_ratio(s, i, wb);
        long b = 0, shift = 0;
        if (!as_integer(s.sample_rate_hz / lay.resolution_hz, b) || b < 1)
            throw PlanError(label(s, i) + ": rate is not a multiple of the DFT resolution");
        if (!as_integer(s.center_offset_hz / lay.resolution_hz, shift))
            throw PlanError(label(s, i) + ": offset not grid-aligned");
        lay.dft_sizes.push_back(static_cast<std::size_t>(b));
        lay.shifts.push_back(shift);
        for (long k = 0; k < b; ++k) {
            long kt = k < (b + 1) / 2 ? k : k - b;
            used.insert(static_cast<std::size_t>((((kt + shift) % n) + n) % n));
        }
    }
    lay.occupied_bins = used.size();
    return lay;
}

ComplexBuf mux_dft(const std::vector<StreamSpec>& streams, const WidebandSpec& wb, std::size_t dft_block) {
    const DftMuxLayout lay = plan_dft_mux(streams, wb, dft_block);
    std::vector<std::size_t> ratios;
    for (std::size_t i = 0; i < streams.size(); ++i) ratios.push_back(integer_ratio(streams[i], i, wb));
    const std::size_t n_out = output_length(streams, ratios);
    if (n_out == 0) return ComplexBuf({}, wb.sample_rate_hz);
    const std::size_t Nw = lay.idft_size;
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < streams.size(); ++i)
        blocks = std::max(blocks, (streams[i].payload.size() + lay.dft_sizes[i] - 1) / lay.dft_sizes[i]);
    std::vector<DftMatrix> fwd;
    for (std::size_t b : lay.dft_sizes) fwd.emplace_back(b);
    const DftMatrix inv(Nw);
    std::vector<cplx> out(blocks * Nw);
    parallel_for(blocks, [&](std::size_t blk) {
        std::vector<cplx> Y(Nw), y(Nw);
        for (std::size_t i = 0; i < streams.size(); ++i) {
            const std::size_t B = lay.dft_sizes[i];
            const auto& x = streams[i].payload.samples();
            std::vector<cplx> seg(B), X(B);
            for (std::size_t j = 0; j < B; ++j) {
                const std::size_t n = blk * B + j;
                seg[j] = n < x.size() ? x[n] : cplx{};
            }
            fwd[i].apply(seg, X, -1);
            const double scale = static_cast<double>(Nw) / static_cast<double>(B);
            const long nw = static_cast<long>(Nw);
            for (std::size_t k = 0; k < B; ++k) {
                long kt = static_cast<long>(k) < static_cast<long>(B + 1) / 2 ? static_cast<long>(k)
                                                                               : static_cast<long>(k) - static_cast<long>(B);
                Y[static_cast<std::size_t>((((kt + lay.shifts[i]) % nw) + nw) % nw)] += scale * X[k];
            }
        }
        inv.apply(Y, y, +1);
        for (std::size_t m = 0; m < Nw; ++m) out[blk * Nw + m] = y[m] / static_cast<double>(Nw);
    });
    out.resize(n_out);
    return ComplexBuf(std::move(out), wb.sample_rate_hz);
}

ComplexBuf demux_reference(const ComplexBuf& wideband, const StreamSpec& spec, const WidebandSpec& wb,
                           const DemuxOptions& opt) {
    check_fits(spec, 0, wb);
    const std::size_t r = integer_ratio(spec, 0, wb);
    if (wideband.sample_rate_hz() != wb.sample_rate_hz) throw ConfigError("demux: buffer rate differs from the wideband rate");
    const PrototypeFilter g =
        design_windowed_sinc(kPi / static_cast<double>(r), opt.num_taps, Window::kaiser(opt.kaiser_beta));
    const auto w = mixer(wideband.size(), -spec.center_offset_hz, wb.sample_rate_hz);
    std::vector<cplx> z(wideband.size());
    for (std::size_t n = 0; n < z.size(); ++n) z[n] = wideband[n] * w[n];
    const std::size_t n_out = wideband.size() / r;
    const long c = static_cast<long>(g.size() / 2);
    const long nz = static_cast<long>(z.size());
    const long ng = static_cast<long>(g.size());
    std::vector<cplx> out(n_out);
    parallel_for(n_out, [&](std::size_t m) {
        const long center = static_cast<long>(m * r) + c;
        cplx acc{};
        const long j0 = std::max(0L, center - nz + 1);
        const long j1 = std::min(ng - 1, center);
        for (long j = j0; j <= j1; ++j) acc += g[static_cast<std::size_t>(j)] * z[static_cast<std::size_t>(center - j)];
        out[m] = acc;
    });
    return ComplexBuf(std::move(out), spec.sample_rate_hz);
}

}  // namespace pfbmux
