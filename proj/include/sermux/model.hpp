#ifndef SERMUX_MODEL_HPP
#define SERMUX_MODEL_HPP

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sermux/assembler.hpp"
#include "sermux/common.hpp"
#include "sermux/corpus.hpp"
#include "sermux/features.hpp"

namespace sermux {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStd = 0.02;

struct ModelConfig {
    int vocab_size = 0;
    int model_dim = 32;
    int n_layers = 2;
    int n_heads = 2;
    int mlp_ratio = 4;
    int max_positions = 320;
    int feature_dim = 8;
    bool tied_head = true;

    int head_dim() const { return model_dim / n_heads; }
    int hidden_dim() const { return model_dim * mlp_ratio; }

    void validate() const {
        if (vocab_size < 1) throw ValidationError("ModelConfig: vocab_size must be >= 1");
        if (model_dim < 1 || n_layers < 1 || n_heads < 1 || mlp_ratio < 1)
            throw ValidationError("ModelConfig: dims must be positive");
        if (model_dim % n_heads != 0)
            throw ValidationError("ModelConfig: model_dim must be divisible by n_heads");
        if (max_positions < 1) throw ValidationError("ModelConfig: max_positions must be >= 1");
        if (feature_dim < 1) throw ValidationError("ModelConfig: feature_dim must be >= 1");
    }
};

struct LayerParams {
    Tensor ln1_g, ln1_b; // dim
    Tensor w_qkv, b_qkv; // 3dim x dim, 3dim
    Tensor w_att, b_att; // dim x dim, dim
    Tensor ln2_g, ln2_b;
    Tensor w_fc, b_fc;   // hidden x dim, hidden
    Tensor w_mlp, b_mlp; // dim x hidden, dim
};

struct ModelParameters {
    ModelConfig cfg;
    Tensor tok_emb; // vocab x dim
    Tensor pos_emb; // max_positions x dim
    std::vector<LayerParams> layers;
    Tensor lnf_g, lnf_b;
    Tensor head_w; // vocab x dim, present iff !tied_head
    Projector projector;

    template <class F>
    void for_each_tensor(F&& f) {
        f("tok_emb", tok_emb);
        f("pos_emb", pos_emb);
        for (size_t l = 0; l < layers.size(); ++l) {
            std::string p = "layer" + std::to_string(l) + ".";
            auto& L = layers[l];
            f(p + "ln1_g", L.ln1_g);
            f(p + "ln1_b", L.ln1_b);
            f(p + "w_qkv", L.w_qkv);
            f(p + "b_qkv", L.b_qkv);
            f(p + "w_att", L.w_att);
            f(p + "b_att", L.b_att);
            f(p + "ln2_g", L.ln2_g);
            f(p + "ln2_b", L.ln2_b);
            f(p + "w_fc", L.w_fc);
            f(p + "b_fc", L.b_fc);
            f(p + "w_mlp", L.w_mlp);
            f(p + "b_mlp", L.b_mlp);
        }
        f("lnf_g", lnf_g);
        f("lnf_b", lnf_b);
        if (!cfg.tied_head) f("head_w", head_w);
        f("projector.weight", projector.weight);
        f("projector.bias", projector.bias);
    }

    template <class F>
    void for_each_tensor(F&& f) const {
        const_cast<ModelParameters*>(this)->for_each_tensor(
            [&](const std::string& name, Tensor& t) { f(name, const_cast<const Tensor&>(t)); });
    }

    size_t parameter_count() const {
        size_t n = 0;
        for_each_tensor([&](const std::string&, const Tensor& t) { n += t.size(); });
        return n;
    }

    const Tensor& output_weights() const { return cfg.tied_head ? tok_emb : head_w; }
};

/// Zero-valued parameter set with the same shapes; used for gradients and moments.
inline ModelParameters zeros_like(const ModelParameters& p) {
    ModelParameters z = p;
    z.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });
    return z;
}

inline ModelParameters init_parameters(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    ModelParameters p;
    p.cfg = cfg;
    int d = cfg.model_dim, h = cfg.hidden_dim();
    p.tok_emb = Tensor(cfg.vocab_size, d);
    p.pos_emb = Tensor(cfg.max_positions, d);
    p.layers.resize(cfg.n_layers);
    for (auto& L : p.layers) {
        L.ln1_g = Tensor(d, 1);
        L.ln1_b = Tensor(d, 1);
        L.w_qkv = Tensor(3 * d, d);
        L.b_qkv = Tensor(3 * d, 1);
        L.w_att = Tensor(d, d);
        L.b_att = Tensor(d, 1);
        L.ln2_g = Tensor(d, 1);
        L.ln2_b = Tensor(d, 1);
        L.w_fc = Tensor(h, d);
        L.b_fc = Tensor(h, 1);
        L.w_mlp = Tensor(d, h);
        L.b_mlp = Tensor(d, 1);
    }
    p.lnf_g = Tensor(d, 1);
    p.lnf_b = Tensor(d, 1);
    if (!cfg.tied_head) p.head_w = Tensor(cfg.vocab_size, d);
    p.projector = Projector(d, cfg.feature_dim);

    Rng rng(seed);
    p.for_each_tensor([&](const std::string& name, Tensor& t) {
        bool is_gain = name.ends_with("ln1_g") || name.ends_with("ln2_g") || name == "lnf_g";
        bool is_bias = name.ends_with("_b") || name.ends_with("b_qkv") ||
                       name.ends_with("b_att") || name.ends_with("b_fc") ||
                       name.ends_with("b_mlp") || name == "projector.bias";
        if (is_gain)
            t.fill(1.0);
        else if (is_bias)
            t.fill(0.0);
        else
            t.fill_normal(rng, kInitStd);
    });
    return p;
}

/// An input position after slot resolution: a token id, or a pooled feature vector.
struct InputItem {
    TokenId token = -1;
    std::vector<double> pooled; // nonempty iff embedding slot
    bool is_slot() const { return !pooled.empty(); }
};

class PooledCache {
  public:
    explicit PooledCache(const Corpus& corpus) : corpus_(&corpus) {}

    const std::vector<double>& get(const std::string& ref) {
        auto it = cache_.find(ref);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(ref, mean_pool(corpus_->frames(ref))).first->second;
    }

  private:
    const Corpus* corpus_;
    std::map<std::string, std::vector<double>> cache_;
};

inline std::vector<InputItem> resolve_prompt(const std::vector<PromptElement>& prompt,
                                             PooledCache& cache) {
    std::vector<InputItem> items;
    items.reserve(prompt.size());
    for (const auto& e : prompt) {
        InputItem it;
        if (e.is_slot())
            it.pooled = cache.get(e.slot_ref);
        else
            it.token = e.token;
        items.push_back(std::move(it));
    }
    return items;
}

inline void append_tokens(std::vector<InputItem>& items, const std::vector<TokenId>& ids,
                          size_t count) {
    for (size_t i = 0; i < count; ++i) {
        InputItem it;
        it.token = ids[i];
        items.push_back(std::move(it));
    }
}

namespace detail {

struct LnStats {
    std::vector<double> mean, rstd;
};

inline void layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Tensor& out,
                       LnStats& stats) {
    int T = x.rows, d = x.cols;
    stats.mean.resize(T);
    stats.rstd.resize(T);
    for (int t = 0; t < T; ++t) {
        const double* xr = x.row(t);
        double m = 0.0;
        for (int i = 0; i < d; ++i) m += xr[i];
        m /= d;
        double var = 0.0;
        for (int i = 0; i < d; ++i) var += (xr[i] - m) * (xr[i] - m);
        var /= d;
        double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
        stats.mean[t] = m;
        stats.rstd[t] = rstd;
        double* yr = out.row(t);
        for (int i = 0; i < d; ++i) yr[i] = gain.v[i] * (xr[i] - m) * rstd + bias.v[i];
    }
}

inline void layer_norm_backward(const Tensor& x, const Tensor& gain, const LnStats& stats,
                                const Tensor& dy, Tensor& dx, Tensor& dgain, Tensor& dbias) {
    int T = x.rows, d = x.cols;
    for (int t = 0; t < T; ++t) {
        const double* xr = x.row(t);
        const double* dyr = dy.row(t);
        double m = stats.mean[t], rstd = stats.rstd[t];
        double sum_dyh = 0.0, sum_dyh_xhat = 0.0;
        for (int i = 0; i < d; ++i) {
            double xhat = (xr[i] - m) * rstd;
            double dyh = dyr[i] * gain.v[i];
            sum_dyh += dyh;
            sum_dyh_xhat += dyh * xhat;
            dgain.v[i] += dyr[i] * xhat;
            dbias.v[i] += dyr[i];
        }
        double* dxr = dx.row(t);
        for (int i = 0; i < d; ++i) {
            double xhat = (xr[i] - m) * rstd;
            double dyh = dyr[i] * gain.v[i];
            dxr[i] += rstd * (dyh - sum_dyh / d - xhat * sum_dyh_xhat / d);
        }
    }
}

// y = W x + b for each row of x; W is (out x in)
inline void linear(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& y) {
    int T = x.rows, in = w.cols, out = w.rows;
    for (int t = 0; t < T; ++t) {
        const double* xr = x.row(t);
        double* yr = y.row(t);
        for (int o = 0; o < out; ++o) yr[o] = dot(w.row(o), xr, in) + b.v[o];
    }
}

inline void linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dx,
                            Tensor& dw, Tensor& db) {
    int T = x.rows, in = w.cols, out = w.rows;
    for (int t = 0; t < T; ++t) {
        const double* xr = x.row(t);
        const double* dyr = dy.row(t);
        double* dxr = dx.row(t);
        for (int o = 0; o < out; ++o) {
            double g = dyr[o];
            if (g == 0.0) continue;
            db.v[o] += g;
            double* dwr = dw.row(o);
            const double* wr = w.row(o);
            for (int i = 0; i < in; ++i) {
                dwr[i] += g * xr[i];
                dxr[i] += g * wr[i];
            }
        }
    }
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

inline double gelu_grad(double x) {
    double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779399460599343819;
    return cdf + x * pdf;
}

} // namespace detail

struct LayerTape {
    detail::LnStats ln1_stats, ln2_stats;
    Tensor x_in;      // T x dim, residual stream entering the layer
    Tensor ln1_out;   // T x dim
    Tensor qkv;       // T x 3dim
    Tensor att_probs; // (heads*T) x T, causal softmax rows
    Tensor att_mix;   // T x dim, concatenated head outputs pre-projection
    Tensor res1;      // T x dim, after attention residual
    Tensor ln2_out;   // T x dim
    Tensor fc_pre;    // T x hidden
    Tensor fc_act;    // T x hidden
};

struct ForwardTape {
    std::vector<InputItem> items;
    Tensor x0; // T x dim input embeddings
    std::vector<LayerTape> layers;
    Tensor x_final; // residual stream before final layer norm
    detail::LnStats lnf_stats;
    Tensor hidden; // T x dim, after final layer norm
};

/// Runs the decoder stack over resolved inputs; fills the tape and returns
/// final hidden states (one row per position).
inline const Tensor& forward_hidden(const ModelParameters& p, const std::vector<InputItem>& items,
                                    ForwardTape& tape) {
    const ModelConfig& cfg = p.cfg;
    int T = static_cast<int>(items.size());
    if (T == 0) throw ValidationError("forward: empty input");
    if (T > cfg.max_positions)
        throw ValidationError("forward: input length " + std::to_string(T) +
                              " exceeds max_positions " + std::to_string(cfg.max_positions));
    int d = cfg.model_dim, hd = cfg.head_dim(), H = cfg.n_heads, hidden = cfg.hidden_dim();
    double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    tape.items = items;
    tape.x0 = Tensor(T, d);
    for (int t = 0; t < T; ++t) {
        double* xr = tape.x0.row(t);
        if (items[t].is_slot()) {
            auto v = project(items[t].pooled, p.projector);
            for (int i = 0; i < d; ++i) xr[i] = v[i];
        } else {
            TokenId id = items[t].token;
            if (id < 0 || id >= cfg.vocab_size)
                throw ValidationError("forward: token id out of range: " + std::to_string(id));
            const double* er = p.tok_emb.row(id);
            for (int i = 0; i < d; ++i) xr[i] = er[i];
        }
        const double* pr = p.pos_emb.row(t);
        for (int i = 0; i < d; ++i) xr[i] += pr[i];
    }

    tape.layers.assign(cfg.n_layers, LayerTape{});
    Tensor x = tape.x0;
    for (int l = 0; l < cfg.n_layers; ++l) {
        const LayerParams& L = p.layers[l];
        LayerTape& lt = tape.layers[l];
        lt.x_in = x;
        lt.ln1_out = Tensor(T, d);
        detail::layer_norm(x, L.ln1_g, L.ln1_b, lt.ln1_out, lt.ln1_stats);
        lt.qkv = Tensor(T, 3 * d);
        detail::linear(lt.ln1_out, L.w_qkv, L.b_qkv, lt.qkv);

        lt.att_probs = Tensor(H * T, T);
        lt.att_mix = Tensor(T, d);
        for (int h = 0; h < H; ++h) {
            int qo = h * hd, ko = d + h * hd, vo = 2 * d + h * hd;
            for (int t = 0; t < T; ++t) {
                const double* q = lt.qkv.row(t) + qo;
                double* probs = lt.att_probs.row(h * T + t);
                double maxs = -1e300;
                for (int s = 0; s <= t; ++s) {
                    double sc = dot(q, lt.qkv.row(s) + ko, hd) * scale;
                    probs[s] = sc;
                    if (sc > maxs) maxs = sc;
                }
                double z = 0.0;
                for (int s = 0; s <= t; ++s) {
                    probs[s] = std::exp(probs[s] - maxs);
                    z += probs[s];
                }
                double* mix = lt.att_mix.row(t) + qo;
                for (int i = 0; i < hd; ++i) mix[i] = 0.0;
                for (int s = 0; s <= t; ++s) {
                    probs[s] /= z;
                    const double* v = lt.qkv.row(s) + vo;
                    for (int i = 0; i < hd; ++i) mix[i] += probs[s] * v[i];
                }
            }
        }
        Tensor att_out(T, d);
        detail::linear(lt.att_mix, L.w_att, L.b_att, att_out);
        lt.res1 = x;
        for (size_t i = 0; i < lt.res1.v.size(); ++i) lt.res1.v[i] += att_out.v[i];

        lt.ln2_out = Tensor(T, d);
        detail::layer_norm(lt.res1, L.ln2_g, L.ln2_b, lt.ln2_out, lt.ln2_stats);
        lt.fc_pre = Tensor(T, hidden);
        detail::linear(lt.ln2_out, L.w_fc, L.b_fc, lt.fc_pre);
        lt.fc_act = Tensor(T, hidden);
        for (size_t i = 0; i < lt.fc_pre.v.size(); ++i)
            lt.fc_act.v[i] = detail::gelu(lt.fc_pre.v[i]);
        Tensor mlp_out(T, d);
        detail::linear(lt.fc_act, L.w_mlp, L.b_mlp, mlp_out);
        x = lt.res1;
        for (size_t i = 0; i < x.v.size(); ++i) x.v[i] += mlp_out.v[i];
    }
    tape.x_final = x;
    tape.hidden = Tensor(T, d);
    detail::layer_norm(x, p.lnf_g, p.lnf_b, tape.hidden, tape.lnf_stats);
    return tape.hidden;
}

/// logits = hidden @ Wout^T with Wout = tok_emb (tied) or head_w.
inline Tensor lm_logits(const ModelParameters& p, const Tensor& hidden) {
    const Tensor& w = p.output_weights();
    Tensor logits(hidden.rows, w.rows);
    for (int t = 0; t < hidden.rows; ++t) {
        const double* hr = hidden.row(t);
        double* lr = logits.row(t);
        for (int v = 0; v < w.rows; ++v) lr[v] = dot(w.row(v), hr, w.cols);
    }
    return logits;
}

inline Tensor forward_logits(const ModelParameters& p, const std::vector<InputItem>& items,
                             ForwardTape& tape) {
    return lm_logits(p, forward_hidden(p, items, tape));
}

inline Tensor forward_logits(const ModelParameters& p, const std::vector<InputItem>& items) {
    ForwardTape tape;
    return forward_logits(p, items, tape);
}

/// Accumulates head gradients and returns d(hidden) for the stack backward.
inline Tensor lm_logits_backward(const ModelParameters& p, const Tensor& hidden,
                                 const Tensor& dlogits, ModelParameters& grads) {
    const Tensor& w = p.output_weights();
    Tensor& dw = p.cfg.tied_head ? grads.tok_emb : grads.head_w;
    Tensor dh(hidden.rows, hidden.cols);
    for (int t = 0; t < hidden.rows; ++t) {
        const double* hr = hidden.row(t);
        const double* dlr = dlogits.row(t);
        double* dhr = dh.row(t);
        for (int v = 0; v < w.rows; ++v) {
            double g = dlr[v];
            if (g == 0.0) continue;
            const double* wr = w.row(v);
            double* dwr = dw.row(v);
            for (int i = 0; i < w.cols; ++i) {
                dwr[i] += g * hr[i];
                dhr[i] += g * wr[i];
            }
        }
    }
    return dh;
}

/// Backpropagates d(hidden) through the stack into `grads` (embeddings,
/// layers, and the speech projector through embedding slots).
inline void backward_from_hidden(const ModelParameters& p, const ForwardTape& tape,
                                 const Tensor& dhidden, ModelParameters& grads) {
    const ModelConfig& cfg = p.cfg;
    int T = tape.hidden.rows, d = cfg.model_dim, hd = cfg.head_dim(), H = cfg.n_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(hd));

    Tensor dx(T, d);
    detail::layer_norm_backward(tape.x_final, p.lnf_g, tape.lnf_stats, dhidden, dx, grads.lnf_g,
                                grads.lnf_b);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const LayerParams& L = p.layers[l];
        LayerParams& G = grads.layers[l];
        const LayerTape& lt = tape.layers[l];

        // MLP block: dx covers d(res1 + mlp_out)
        Tensor dact(T, cfg.hidden_dim());
        Tensor dln2(T, d);
        detail::linear_backward(lt.fc_act, L.w_mlp, dx, dact, G.w_mlp, G.b_mlp);
        Tensor dpre(T, cfg.hidden_dim());
        for (size_t i = 0; i < dpre.v.size(); ++i)
            dpre.v[i] = dact.v[i] * detail::gelu_grad(lt.fc_pre.v[i]);
        detail::linear_backward(lt.ln2_out, L.w_fc, dpre, dln2, G.w_fc, G.b_fc);
        Tensor dres1 = dx; // residual path
        detail::layer_norm_backward(lt.res1, L.ln2_g, lt.ln2_stats, dln2, dres1, G.ln2_g,
                                    G.ln2_b);

        // attention block: dres1 covers d(x_in + att_out)
        Tensor dmix(T, d);
        Tensor dln1(T, d);
        detail::linear_backward(lt.att_mix, L.w_att, dres1, dmix, G.w_att, G.b_att);
        Tensor dqkv(T, 3 * d);
        for (int h = 0; h < H; ++h) {
            int qo = h * hd, ko = d + h * hd, vo = 2 * d + h * hd;
            for (int t = 0; t < T; ++t) {
                const double* probs = lt.att_probs.row(h * T + t);
                const double* dm = dmix.row(t) + qo;
                // dV and dprobs
                std::vector<double> dprobs(t + 1, 0.0);
                for (int s = 0; s <= t; ++s) {
                    const double* v = lt.qkv.row(s) + vo;
                    double* dv = dqkv.row(s) + vo;
                    double dp = 0.0;
                    for (int i = 0; i < hd; ++i) {
                        dv[i] += probs[s] * dm[i];
                        dp += v[i] * dm[i];
                    }
                    dprobs[s] = dp;
                }
                // softmax backward
                double inner = 0.0;
                for (int s = 0; s <= t; ++s) inner += probs[s] * dprobs[s];
                const double* q = lt.qkv.row(t) + qo;
                double* dq = dqkv.row(t) + qo;
                for (int s = 0; s <= t; ++s) {
                    double dscore = probs[s] * (dprobs[s] - inner) * scale;
                    if (dscore == 0.0) continue;
                    const double* k = lt.qkv.row(s) + ko;
                    double* dk = dqkv.row(s) + ko;
                    for (int i = 0; i < hd; ++i) {
                        dq[i] += dscore * k[i];
                        dk[i] += dscore * q[i];
                    }
                }
            }
        }
        detail::linear_backward(lt.ln1_out, L.w_qkv, dqkv, dln1, G.w_qkv, G.b_qkv);
        Tensor dx_in = dres1;
        detail::layer_norm_backward(lt.x_in, L.ln1_g, lt.ln1_stats, dln1, dx_in, G.ln1_g,
                                    G.ln1_b);
        dx = std::move(dx_in);
    }

    // input embeddings
    for (int t = 0; t < T; ++t) {
        const double* dxr = dx.row(t);
        double* dpos = grads.pos_emb.row(t);
        for (int i = 0; i < d; ++i) dpos[i] += dxr[i];
        const InputItem& item = tape.items[t];
        if (item.is_slot()) {
            const auto& pooled = item.pooled;
            for (int r = 0; r < d; ++r) {
                double g = dxr[r];
                grads.projector.bias.v[r] += g;
                double* dwr = grads.projector.weight.row(r);
                for (size_t c = 0; c < pooled.size(); ++c) dwr[c] += g * pooled[c];
            }
        } else {
            double* demb = grads.tok_emb.row(item.token);
            for (int i = 0; i < d; ++i) demb[i] += dxr[i];
        }
    }
}

struct SequenceLogProb {
    double total = 0.0;
    std::vector<double> per_step;
};

inline std::vector<double> log_softmax_row(const double* logits, int n) {
    double maxv = logits[0];
    for (int i = 1; i < n; ++i) maxv = std::max(maxv, logits[i]);
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(logits[i] - maxv);
    double logz = maxv + std::log(z);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = logits[i] - logz;
    return out;
}

/// Teacher-forced log probability of the serialized target given the prompt.
inline SequenceLogProb sequence_log_prob(const ModelParameters& p, const SerializedExample& ex,
                                         PooledCache& cache) {
    auto items = resolve_prompt(ex.prompt, cache);
    size_t P = items.size(), T = ex.target.size();
    if (T == 0) throw ValidationError("sequence_log_prob: empty target");
    append_tokens(items, ex.target, T - 1); // last target token is only predicted
    ForwardTape tape;
    Tensor logits = forward_logits(p, items, tape);
    SequenceLogProb out;
    out.per_step.resize(T);
    for (size_t i = 0; i < T; ++i) {
        int pos = static_cast<int>(P) - 1 + static_cast<int>(i);
        auto ls = log_softmax_row(logits.row(pos), logits.cols);
        out.per_step[i] = ls[ex.target[i]];
        out.total += out.per_step[i];
    }
    return out;
}

// ---- checkpoint io ----

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = {{"vocab_size", c.vocab_size},     {"model_dim", c.model_dim},
         {"n_layers", c.n_layers},         {"n_heads", c.n_heads},
         {"mlp_ratio", c.mlp_ratio},       {"max_positions", c.max_positions},
         {"feature_dim", c.feature_dim},   {"tied_head", c.tied_head}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
    j.at("vocab_size").get_to(c.vocab_size);
    j.at("model_dim").get_to(c.model_dim);
    j.at("n_layers").get_to(c.n_layers);
    j.at("n_heads").get_to(c.n_heads);
    j.at("mlp_ratio").get_to(c.mlp_ratio);
    j.at("max_positions").get_to(c.max_positions);
    j.at("feature_dim").get_to(c.feature_dim);
    j.at("tied_head").get_to(c.tied_head);
}

inline void save_checkpoint(const ModelParameters& p, const std::string& path) {
    nlohmann::json manifest = nlohmann::json::array();
    p.for_each_tensor([&](const std::string& name, const Tensor& t) {
        manifest.push_back({{"name", name}, {"rows", t.rows}, {"cols", t.cols}});
    });
    nlohmann::json header = {{"config", p.cfg}, {"tensors", manifest}};
    std::string hs = header.dump();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint: " + path);
    os.write("SMCK", 4);
    plff::write_u32(os, static_cast<uint32_t>(hs.size()));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    p.for_each_tensor([&](const std::string&, const Tensor& t) {
        for (double x : t.v) {
            uint64_t bits;
            std::memcpy(&bits, &x, 8);
            plff::write_u32(os, static_cast<uint32_t>(bits & 0xffffffffULL));
            plff::write_u32(os, static_cast<uint32_t>(bits >> 32));
        }
    });
    if (!os) throw IoError("short write on checkpoint: " + path);
}

inline ModelParameters load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SMCK", 4) != 0)
        throw FormatError("bad magic in checkpoint: " + path);
    uint32_t hlen = plff::read_u32(is);
    std::string hs(hlen, '\0');
    is.read(hs.data(), hlen);
    if (!is) throw FormatError("truncated checkpoint header: " + path);
    nlohmann::json header = nlohmann::json::parse(hs);
    ModelConfig cfg = header.at("config").get<ModelConfig>();
    ModelParameters p = init_parameters(cfg, 0);
    auto manifest = header.at("tensors");
    size_t idx = 0;
    p.for_each_tensor([&](const std::string& name, Tensor& t) {
        if (idx >= manifest.size())
            throw FormatError("checkpoint manifest too short: " + path);
        const auto& m = manifest[idx++];
        if (m.at("name").get<std::string>() != name || m.at("rows").get<int>() != t.rows ||
            m.at("cols").get<int>() != t.cols)
            throw FormatError("checkpoint shape manifest mismatch at " + name);
        for (double& x : t.v) {
            uint64_t lo = plff::read_u32(is);
            uint64_t hi = plff::read_u32(is);
            if (!is) throw FormatError("truncated checkpoint payload: " + path);
            uint64_t bits = lo | (hi << 32);
            std::memcpy(&x, &bits, 8);
        }
    });
    return p;
}

} // namespace sermux

#endif
