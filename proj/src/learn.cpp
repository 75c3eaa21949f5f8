// SPDX-License-Identifier: Apache-2.0
#include "pfbmux/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pfbmux/errors.hpp"
#include "pfbmux/parallel.hpp"

namespace pfbmux {

LearnableSynthesisFilter::LearnableSynthesisFilter(std::vector<double> half_taps, std::size_t total_len, double cutoff)
    : half_(std::move(half_taps)), total_len_(total_len), cutoff_(cutoff) {
    if (total_len_ == 0 || total_len_ % 2 == 0) throw ConfigError("learnable filter: total_len must be odd");
    if (half_.size() != total_len_ / 2 + 1) throw ConfigError("learnable filter: half_taps must have total_len/2+1 entries");
    if (!(cutoff_ > 0.0 && cutoff_ <= kPi)) throw ConfigError("learnable filter: cutoff_norm must lie in (0, pi]");
    for (double v : half_)
        if (!std::isfinite(v)) throw ConfigError("learnable filter: non-finite tap");
}

PrototypeFilter LearnableSynthesisFilter::materialize() const {
    std::vector<double> t(total_len_);
    for (std::size_t i = 0; i < half_.size(); ++i) {
        t[i] = half_[i];
        t[total_len_ - 1 - i] = half_[i];
    }
    return PrototypeFilter(std::move(t), cutoff_, true);
}

std::vector<double> LearnableSynthesisFilter::tie(const std::vector<double>& g) const {
    const std::size_t c = total_len_ / 2;
    std::vector<double> h(half_.size());
    for (std::size_t i = 0; i < c; ++i) h[i] = g[i] + g[total_len_ - 1 - i];
    h[c] = g[c];
    return h;
}

LearnableSynthesisFilter init_model_driven(std::size_t K, std::size_t L, double cutoff_norm, std::size_t total_len,
                                           Window window) {
    if (K == 0 || L == 0 || K % L != 0) throw ConfigError("init: K must be a multiple of L");
    PrototypeFilter f = design_windowed_sinc(cutoff_norm, total_len, window);
    std::vector<double> half(f.taps().begin(), f.taps().begin() + static_cast<long>(total_len / 2 + 1));
    return LearnableSynthesisFilter(std::move(half), total_len, cutoff_norm);
}

LearnableSynthesisFilter init_random_normal(std::size_t total_len, std::uint64_t seed, double cutoff_norm) {
    if (total_len == 0 || total_len % 2 == 0) throw ConfigError("init: total_len must be odd");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(total_len)));
    std::vector<double> half(total_len / 2 + 1);
    for (auto& v : half) v = nd(rng);
    return LearnableSynthesisFilter(std::move(half), total_len, cutoff_norm);
}

PolyphaseSet branch_kernels(const LearnableSynthesisFilter& f, std::size_t K, std::size_t L) {
    return polyphase_decompose_synthesis(f.materialize(), K, L);
}

SubbandRouter CascadeModel::router() const {
    return SubbandRouter(analysis.K, shape.K, 0, static_cast<double>(lag()), routing);
}

long CascadeModel::lag() const {
    SubbandRouter probe(analysis.K, shape.K, 0, 0.0, routing);
    const std::size_t r = ratio();
    const std::size_t ch = (analysis.prototype.size() - 1) / 2;
    const std::size_t cf = (synthesis.total_len() - 1) / 2;
    return static_cast<long>(ch * r + probe.frame_delay() * shape.L + cf);
}

SynthesisBankConfig CascadeModel::synthesis_config() const {
    return SynthesisBankConfig(shape.K, shape.L, synthesis.materialize());
}

CascadeModel make_cascade_model(AnalysisBankConfig acfg, SynthesisShape shape, LearnableSynthesisFilter syn,
                                RoutingOptions routing) {
    if (shape.K == 0 || shape.L == 0 || shape.K % shape.L != 0)
        throw ConfigError("cascade: K_syn must be a multiple of L");
    if (shape.K / shape.L != acfg.I) throw ConfigError("cascade: analysis and synthesis oversampling ratios differ");
    if (shape.K % acfg.K != 0) throw ConfigError("cascade: K_syn must be a multiple of K_ana");
    if (acfg.prototype.size() % 2 == 0 || !acfg.prototype.symmetric())
        throw ConfigError("cascade: analysis prototype must be odd-length and symmetric");
    return CascadeModel{std::move(acfg), shape, routing, std::move(syn)};
}

ComplexBuf forward(const ComplexBuf& x_low, const CascadeModel& model) {
    const SubbandRouter router = model.router();
    const SubbandFrame X = afb_polyphase(x_low, model.analysis);
    Matrix<cplx> S(model.shape.K, X.T() == 0 ? 0 : router.output_frames(X.T()));
    if (X.T() > 0) router.accumulate(X.data, S, model.gain());
    return sfb_polyphase(SubbandFrame(std::move(S), X.subband_rate_hz, X.subband_interval_hz),
                         model.synthesis_config());
}

ComplexBuf forward(const ComplexBuf& x_low, const AnalysisBankConfig& acfg, const LearnableSynthesisFilter& syn,
                   SynthesisShape shape, const RoutingOptions& routing) {
    return forward(x_low, make_cascade_model(acfg, shape, syn, routing));
}

double loss_mse(const ComplexBuf& x_hat, const ComplexBuf& x_high, long lag) {
    const long nh = static_cast<long>(x_hat.size());
    const long nx = static_cast<long>(x_high.size());
    const long lo = std::max(0L, -lag);
    const long hi = std::min(nx, nh - lag);
    if (hi <= lo) throw NumericError("loss_mse: empty overlap");
    double acc = 0.0;
    for (long l = lo; l < hi; ++l) acc += std::norm(x_hat[static_cast<std::size_t>(l + lag)] - x_high[static_cast<std::size_t>(l)]);
    return acc / static_cast<double>(hi - lo);
}

PairCache::PairCache(const TrainingPair& pair, const CascadeModel& model)
    : x_low_(pair.x_low.samples()),
      target_(pair.x_high.samples()),
      analysis_(model.analysis),
      router_(model.router()),
      Ks_(model.shape.K),
      L_(model.shape.L),
      gain_(model.gain()),
      lag_(model.lag()) {
    if (pair.x_high.sample_rate_hz() != pair.x_low.sample_rate_hz() * static_cast<double>(model.ratio()))
        throw ConfigError("training pair rate ratio does not match the cascade");
    const SubbandFrame X = afb_polyphase(pair.x_low, analysis_);
    T_ = X.T();
    Matrix<cplx> S(Ks_, router_.output_frames(T_));
    router_.accumulate(X.data, S);
    shat_ = synthesis_branch_inputs(S, DftMatrix(Ks_));
    const long ns = static_cast<long>((shat_.cols() - 1) * L_ + model.synthesis.total_len());
    const long n = std::min(static_cast<long>(target_.size()), ns - lag_);
    if (n <= 0 || lag_ < 0) throw NumericError("training pair: empty loss window");
    n_ = static_cast<std::size_t>(n);
}

std::vector<cplx> PairCache::window_output(std::span<const double> f) const {
    std::vector<cplx> out(n_);
    const long nf = static_cast<long>(f.size());
    const long lo = lag_;
    const long hi = lag_ + static_cast<long>(n_);
    const long L = static_cast<long>(L_);
    for (std::size_t m = 0; m < shat_.cols(); ++m) {
        const long base = static_cast<long>(m) * L;
        const long n0 = std::max(base, lo);
        const long n1 = std::min(base + nf, hi);
        for (long n = n0; n < n1; ++n)
            out[static_cast<std::size_t>(n - lo)] += f[static_cast<std::size_t>(n - base)] *
                                                     shat_(static_cast<std::size_t>(n) % Ks_, m);
    }
    for (auto& v : out) v *= gain_;
    return out;
}

std::vector<cplx> PairCache::residual(std::span<const double> f) const {
    std::vector<cplx> e = window_output(f);
    for (std::size_t l = 0; l < n_; ++l) e[l] -= target_[l];
    return e;
}

double PairCache::loss(std::span<const double> f) const {
    const auto e = residual(f);
    double acc = 0.0;
    for (const auto& v : e) acc += std::norm(v);
    return acc / static_cast<double>(n_);
}

std::vector<double> PairCache::grad_full(std::span<const double> f) const {
    const auto e = residual(f);
    const long nf = static_cast<long>(f.size());
    const long lo = lag_;
    const long hi = lag_ + static_cast<long>(n_);
    const long L = static_cast<long>(L_);
    std::vector<double> g(f.size(), 0.0);
    for (std::size_t m = 0; m < shat_.cols(); ++m) {
        const long base = static_cast<long>(m) * L;
        const long n0 = std::max(base, lo);
        const long n1 = std::min(base + nf, hi);
        for (long n = n0; n < n1; ++n) {
            const cplx a = std::conj(e[static_cast<std::size_t>(n - lo)]) * shat_(static_cast<std::size_t>(n) % Ks_, m);
            g[static_cast<std::size_t>(n - base)] += a.real();
        }
    }
    const double s = 2.0 * gain_ / static_cast<double>(n_);
    for (auto& v : g) v *= s;
    return g;
}

std::vector<double> PairCache::grad_analysis_full(std::span<const double> f) const {
    const auto e = residual(f);
    const long nf = static_cast<long>(f.size());
    const long lo = lag_;
    const long hi = lag_ + static_cast<long>(n_);
    const long L = static_cast<long>(L_);
    const std::size_t Tp = shat_.cols();
    // A_rho(m) = sum over n = rho mod K of e(n) f(n - Lm)
    Matrix<cplx> A(Ks_, Tp);
    for (std::size_t m = 0; m < Tp; ++m) {
        const long base = static_cast<long>(m) * L;
        const long n0 = std::max(base, lo);
        const long n1 = std::min(base + nf, hi);
        for (long n = n0; n < n1; ++n)
            A(static_cast<std::size_t>(n) % Ks_, m) += e[static_cast<std::size_t>(n - lo)] * f[static_cast<std::size_t>(n - base)];
    }
    const DftMatrix Ws(Ks_);
    Matrix<cplx> gS(Ks_, Tp);
    const double s = gain_ / static_cast<double>(n_);
    std::vector<cplx> col(Ks_), res(Ks_);
    for (std::size_t m = 0; m < Tp; ++m) {
        for (std::size_t r = 0; r < Ks_; ++r) col[r] = A(r, m);
        Ws.apply(col, res, -1);
        for (std::size_t k = 0; k < Ks_; ++k) gS(k, m) = s * res[k];
    }
    const Matrix<cplx> gX = router_.adjoint(gS, T_);
    const std::size_t Ka = analysis_.K;
    const DftMatrix Wa(Ka);
    Matrix<cplx> B(Ka, T_);
    std::vector<cplx> ca(Ka), ra(Ka);
    for (std::size_t m = 0; m < T_; ++m) {
        for (std::size_t k = 0; k < Ka; ++k) ca[k] = gX(k, m);
        Wa.apply(ca, ra, +1);
        for (std::size_t r = 0; r < Ka; ++r) B(r, m) = ra[r];
    }
    const long nh = static_cast<long>(analysis_.prototype.size());
    const long nx = static_cast<long>(x_low_.size());
    const long M = static_cast<long>(analysis_.M);
    std::vector<double> g(static_cast<std::size_t>(nh), 0.0);
    for (std::size_t m = 0; m < T_; ++m) {
        const long c = static_cast<long>(m) * M;
        for (long i = std::max(0L, c - nx + 1); i < std::min(nh, c + 1); ++i) {
            const long n = c - i;
            const cplx v = x_low_[static_cast<std::size_t>(n)] * std::conj(B(static_cast<std::size_t>(n) % Ka, m));
            g[static_cast<std::size_t>(i)] += 2.0 * v.real();
        }
    }
    return g;
}

std::vector<double> grad_analytic(const TrainingPair& pair, const CascadeModel& model) {
    const PairCache cache(pair, model);
    const PrototypeFilter f = model.synthesis.materialize();
    return model.synthesis.tie(cache.grad_full(f.taps()));
}

namespace {

LearnableSynthesisFilter analysis_as_learnable(const AnalysisBankConfig& a) {
    const auto& t = a.prototype.taps();
    std::vector<double> half(t.begin(), t.begin() + static_cast<long>(t.size() / 2 + 1));
    return LearnableSynthesisFilter(std::move(half), t.size(), a.prototype.cutoff_norm());
}

}  // namespace

JointGradient grad_analytic_joint(const TrainingPair& pair, const CascadeModel& model) {
    const PairCache cache(pair, model);
    const PrototypeFilter f = model.synthesis.materialize();
    JointGradient g;
    g.synthesis = model.synthesis.tie(cache.grad_full(f.taps()));
    g.analysis = analysis_as_learnable(model.analysis).tie(cache.grad_analysis_full(f.taps()));
    return g;
}

double mean_loss(const std::vector<TrainingPair>& pairs, const CascadeModel& model) {
    if (pairs.empty()) throw ConfigError("mean_loss: no pairs");
    const PrototypeFilter f = model.synthesis.materialize();
    std::vector<double> l(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) { l[i] = PairCache(pairs[i], model).loss(f.taps()); });
    double acc = 0.0;
    for (double v : l) acc += v;
    return acc / static_cast<double>(pairs.size());
}

double pair_nmse_db(const TrainingPair& pair, const CascadeModel& model) {
    return nmse_db_at(forward(pair.x_low, model), pair.x_high, model.lag());
}

namespace {

struct Adam {
    std::vector<double> m, v;
    long t = 0;
    void step(std::vector<double>& theta, const std::vector<double>& g, const OptimizerConfig& c) {
        if (m.empty()) {
            m.assign(theta.size(), 0.0);
            v.assign(theta.size(), 0.0);
        }
        ++t;
        const double b1t = 1.0 - std::pow(c.beta1, static_cast<double>(t));
        const double b2t = 1.0 - std::pow(c.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            theta[i] -= c.lr * (m[i] / b1t) / (std::sqrt(v[i] / b2t) + c.eps);
        }
    }
};

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("training: epochs must be >= 1");
    const auto& o = cfg.optimizer;
    if (!(o.lr >= 0.0) || !std::isfinite(o.lr)) throw ConfigError("training: lr must be finite and non-negative");
    if (o.kind == OptimizerConfig::Kind::Adam &&
        !(o.beta1 >= 0.0 && o.beta1 < 1.0 && o.beta2 >= 0.0 && o.beta2 < 1.0 && o.eps > 0.0))
        throw ConfigError("training: invalid Adam parameters");
    if (o.kind == OptimizerConfig::Kind::LineSearch && cfg.train_analysis)
        throw ConfigError("training: line search supports synthesis-only training");
}

}  // namespace

TrainResult train(const std::vector<TrainingPair>& pairs, const TrainConfig& cfg, const CascadeModel& init) {
    validate(cfg);
    if (pairs.empty()) throw ConfigError("training: no training pairs");
    CascadeModel model = init;
    LearnableSynthesisFilter ana = analysis_as_learnable(model.analysis);
    const std::size_t ns = model.synthesis.parameter_count();
    const std::size_t na = cfg.train_analysis ? ana.parameter_count() : 0;

    std::vector<double> theta(model.synthesis.half_taps());
    if (cfg.train_analysis) theta.insert(theta.end(), ana.half_taps().begin(), ana.half_taps().end());

    auto apply_theta = [&] {
        std::copy(theta.begin(), theta.begin() + static_cast<long>(ns), model.synthesis.half_taps().begin());
        if (cfg.train_analysis) {
            std::copy(theta.begin() + static_cast<long>(ns), theta.end(), ana.half_taps().begin());
            model.analysis = AnalysisBankConfig(model.analysis.K, model.analysis.M, ana.materialize());
        }
    };

    std::vector<std::optional<PairCache>> caches(pairs.size());
    auto build_caches = [&] {
        parallel_for(pairs.size(), [&](std::size_t i) { caches[i].emplace(pairs[i], model); });
    };
    build_caches();

    const std::size_t B = (cfg.batch == 0 || cfg.batch >= pairs.size()) ? pairs.size() : cfg.batch;
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    Adam adam;
    TrainResult res;
    res.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));

    std::vector<double> losses(pairs.size());
    std::vector<std::vector<double>> grads(pairs.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (B < pairs.size()) std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t b0 = 0; b0 < pairs.size(); b0 += B) {
            const std::size_t b1 = std::min(pairs.size(), b0 + B);
            const PrototypeFilter f = model.synthesis.materialize();
            parallel_for(b1 - b0, [&](std::size_t j) {
                const std::size_t i = order[b0 + j];
                const PairCache& c = *caches[i];
                losses[i] = c.loss(f.taps());
                std::vector<double> g = model.synthesis.tie(c.grad_full(f.taps()));
                if (cfg.train_analysis) {
                    auto ga = ana.tie(c.grad_analysis_full(f.taps()));
                    g.insert(g.end(), ga.begin(), ga.end());
                }
                grads[i] = std::move(g);
            });
            // batch reduction in a fixed order
            double bl = 0.0;
            std::vector<double> g(ns + na, 0.0);
            for (std::size_t j = b0; j < b1; ++j) {
                const std::size_t i = order[j];
                bl += losses[i];
                for (std::size_t p = 0; p < g.size(); ++p) g[p] += grads[i][p];
            }
            const double inv = 1.0 / static_cast<double>(b1 - b0);
            bl *= inv;
            for (auto& v : g) v *= inv;
            if (!std::isfinite(bl)) throw TrainingError("training diverged: loss is not finite", epoch);
            epoch_loss += bl;
            ++n_batches;

            switch (cfg.optimizer.kind) {
                case OptimizerConfig::Kind::Sgd:
                    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] -= cfg.optimizer.lr * g[p];
                    break;
                case OptimizerConfig::Kind::Adam: adam.step(theta, g, cfg.optimizer); break;
                case OptimizerConfig::Kind::LineSearch: {
                    LearnableSynthesisFilter dir(g, model.synthesis.total_len(), model.synthesis.cutoff_norm());
                    const PrototypeFilter fd = dir.materialize();
                    std::vector<double> num(b1 - b0), den(b1 - b0);
                    parallel_for(b1 - b0, [&](std::size_t j) {
                        const PairCache& c = *caches[order[b0 + j]];
                        const auto e = c.residual(f.taps());
                        const auto y = c.window_output(fd.taps());
                        double a = 0.0, d = 0.0;
                        for (std::size_t l = 0; l < e.size(); ++l) {
                            a += (std::conj(e[l]) * y[l]).real();
                            d += std::norm(y[l]);
                        }
                        num[j] = a / static_cast<double>(e.size());
                        den[j] = d / static_cast<double>(e.size());
                    });
                    double a = 0.0, d = 0.0;
                    for (std::size_t j = 0; j < num.size(); ++j) {
                        a += num[j];
                        d += den[j];
                    }
                    const double alpha = d > 0.0 ? a / d : 0.0;
                    for (std::size_t p = 0; p < theta.size(); ++p) theta[p] -= alpha * g[p];
                    break;
                }
            }
            for (double v : theta)
                if (!std::isfinite(v)) throw TrainingError("training diverged: parameters are not finite", epoch);
            apply_theta();
        }
        res.loss_curve.push_back(epoch_loss / static_cast<double>(n_batches));
        if (cfg.train_analysis) build_caches();
    }
    res.final_loss = mean_loss(pairs, model);
    if (!std::isfinite(res.final_loss)) throw TrainingError("training diverged: final loss is not finite", cfg.epochs);
    res.synthesis = model.synthesis;
    if (cfg.train_analysis) res.analysis = ana;
    return res;
}

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // splitmix64 over the tuple keeps schemes and pairs on independent streams
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + stream * 0xBF58476D1CE4E5B9ull + index + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::size_t integer_sps(double f_s, double unit_rate, const char* what) {
    double s = f_s / unit_rate;
    if (s < 1.0 || std::abs(s - std::round(s)) > 1e-9) throw ConfigError(std::string(what) + ": sample rate is not a multiple of the symbol rate");
    return static_cast<std::size_t>(std::llround(s));
}

}  // namespace

std::vector<TrainingPair> make_training_pairs(Scheme scheme, std::size_t count, double f_s, std::size_t r,
                                              std::uint64_t seed, const PairOptions& opt) {
    if (r < 2) throw ConfigError("training pairs: ratio must be an integer >= 2");
    const double f_h = f_s * static_cast<double>(r);
    std::vector<TrainingPair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t s = sub_seed(seed, static_cast<std::uint64_t>(scheme), i);
        switch (scheme) {
            case Scheme::Qpsk: {
                auto sym = random_qpsk_symbols(opt.n_symbols, s);
                out.push_back({render_qpsk(sym, opt.qpsk_sps, opt.qpsk_rolloff, f_s),
                               render_qpsk(sym, opt.qpsk_sps * r, opt.qpsk_rolloff, f_h), scheme});
                break;
            }
            case Scheme::ZigbeeOqpsk: {
                const std::size_t sps = integer_sps(f_s, kZigbeeChipRate, "zigbee");
                auto sym = bits_to_zigbee_symbols(random_bits(opt.n_symbols, s));
                out.push_back({render_oqpsk(sym, sps, f_s), render_oqpsk(sym, sps * r, f_h), scheme});
                break;
            }
            case Scheme::Gmsk: {
                const std::size_t sps = integer_sps(f_s, kBleBitRate, "gmsk");
                auto bits = random_bits(opt.n_symbols, s);
                out.push_back({render_gmsk(bits, sps, opt.gmsk_bt, f_s), render_gmsk(bits, sps * r, opt.gmsk_bt, f_h), scheme});
                break;
            }
        }
    }
    return out;
}

std::vector<TrainingPair> make_training_mixture(const PairMixture& mix, double f_s, std::size_t r, std::uint64_t seed,
                                                const PairOptions& opt) {
    auto out = make_training_pairs(Scheme::Qpsk, mix.qpsk, f_s, r, seed, opt);
    for (auto& p : make_training_pairs(Scheme::ZigbeeOqpsk, mix.zigbee, f_s, r, seed, opt)) out.push_back(std::move(p));
    for (auto& p : make_training_pairs(Scheme::Gmsk, mix.gmsk, f_s, r, seed, opt)) out.push_back(std::move(p));
    return out;
}

}  // namespace pfbmux
