#ifndef SERMUX_TRAINER_HPP
#define SERMUX_TRAINER_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sermux/assembler.hpp"
#include "sermux/common.hpp"
#include "sermux/model.hpp"

namespace sermux {

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_steps = 1000;
    int eval_every = 100;
    uint64_t seed = 1;

    void validate() const {
        if (batch_size < 1 || learning_rate <= 0.0 || max_steps < 0 || eval_every < 1)
            throw ValidationError("TrainConfig: hyperparameters must be positive");
        if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 || epsilon <= 0.0)
            throw ValidationError("TrainConfig: adam parameters out of range");
    }
};

struct OptimizerState {
    long step = 0;
    ModelParameters m, v;

    explicit OptimizerState(const ModelParameters& params)
        : m(zeros_like(params)), v(zeros_like(params)) {}
};

/// Mean over masked rows of -log softmax(logits[row])[targets[row]].
inline double masked_cross_entropy(const Tensor& logits, const std::vector<TokenId>& targets,
                                   const std::vector<bool>& mask) {
    if (static_cast<int>(targets.size()) != logits.rows ||
        static_cast<int>(mask.size()) != logits.rows)
        throw ValidationError("masked_cross_entropy: shape mismatch");
    double total = 0.0;
    long count = 0;
    for (int t = 0; t < logits.rows; ++t) {
        if (!mask[t]) continue;
        auto ls = log_softmax_row(logits.row(t), logits.cols);
        total -= ls[targets[t]];
        ++count;
    }
    if (count == 0) throw ValidationError("masked_cross_entropy: no masked position");
    return total / count;
}

namespace detail {

/// Per-example teacher-forced NLL. Accumulates the gradient of the *summed*
/// NLL into `grads` and returns (sum, masked position count).
inline std::pair<double, long> example_nll_and_grad(const ModelParameters& p,
                                                    const SerializedExample& ex,
                                                    PooledCache& cache, ModelParameters* grads) {
    auto items = resolve_prompt(ex.prompt, cache);
    size_t P = items.size(), T = ex.target.size();
    append_tokens(items, ex.target, T - 1);
    ForwardTape tape;
    const Tensor& hidden = forward_hidden(p, items, tape);
    Tensor logits = lm_logits(p, hidden);

    double total = 0.0;
    Tensor dlogits;
    if (grads) dlogits = Tensor(logits.rows, logits.cols);
    for (size_t i = 0; i < T; ++i) {
        int pos = static_cast<int>(P) - 1 + static_cast<int>(i);
        auto ls = log_softmax_row(logits.row(pos), logits.cols);
        total -= ls[ex.target[i]];
        if (grads) {
            double* dlr = dlogits.row(pos);
            for (int v = 0; v < logits.cols; ++v) dlr[v] += std::exp(ls[v]);
            dlr[ex.target[i]] -= 1.0;
        }
    }
    if (grads) {
        Tensor dhidden = lm_logits_backward(p, hidden, dlogits, *grads);
        backward_from_hidden(p, tape, dhidden, *grads);
    }
    return {total, static_cast<long>(T)};
}

} // namespace detail

/// Mean teacher-forced NLL over a set of examples (no gradient).
inline double mean_nll(const ModelParameters& p, const std::vector<SerializedExample>& examples,
                       PooledCache& cache) {
    if (examples.empty()) throw ValidationError("mean_nll: empty example set");
    double total = 0.0;
    long count = 0;
    for (const auto& ex : examples) {
        auto [nll, n] = detail::example_nll_and_grad(p, ex, cache, nullptr);
        total += nll;
        count += n;
    }
    return total / count;
}

/// Gradient of the mean masked NLL over a batch.
inline double batch_loss_and_grad(const ModelParameters& p,
                                  const std::vector<SerializedExample>& batch, PooledCache& cache,
                                  ModelParameters& grads) {
    if (batch.empty()) throw ValidationError("batch_loss_and_grad: empty batch");
    double total = 0.0;
    long count = 0;
    for (const auto& ex : batch) {
        auto [nll, n] = detail::example_nll_and_grad(p, ex, cache, &grads);
        total += nll;
        count += n;
    }
    double inv = 1.0 / count;
    grads.for_each_tensor([&](const std::string&, Tensor& t) {
        for (auto& x : t.v) x *= inv;
    });
    return total * inv;
}

/// Bias-corrected Adam over parallel tensor lists.
inline void adam_update_tensors(const std::vector<Tensor*>& params,
                                const std::vector<Tensor*>& moment1,
                                const std::vector<Tensor*>& moment2,
                                const std::vector<const Tensor*>& grads, const TrainConfig& cfg,
                                long step) {
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t k = 0; k < params.size(); ++k) {
        Tensor& p = *params[k];
        Tensor& m = *moment1[k];
        Tensor& v = *moment2[k];
        const Tensor& g = *grads[k];
        for (size_t i = 0; i < p.v.size(); ++i) {
            m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
            v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
            double mhat = m.v[i] / bc1;
            double vhat = v.v[i] / bc2;
            p.v[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

inline void adam_update(ModelParameters& params, OptimizerState& opt,
                        const ModelParameters& grads, const TrainConfig& cfg) {
    opt.step += 1;
    std::vector<Tensor*> ps, ms, vs;
    std::vector<const Tensor*> gs;
    params.for_each_tensor([&](const std::string&, Tensor& t) { ps.push_back(&t); });
    opt.m.for_each_tensor([&](const std::string&, Tensor& t) { ms.push_back(&t); });
    opt.v.for_each_tensor([&](const std::string&, Tensor& t) { vs.push_back(&t); });
    grads.for_each_tensor([&](const std::string&, const Tensor& t) { gs.push_back(&t); });
    adam_update_tensors(ps, ms, vs, gs, cfg, opt.step);
}

/// One Adam step on a batch; returns the batch loss.
inline double train_step(ModelParameters& params, OptimizerState& opt,
                         const std::vector<SerializedExample>& batch, PooledCache& cache,
                         const TrainConfig& cfg) {
    ModelParameters grads = zeros_like(params);
    double loss = batch_loss_and_grad(params, batch, cache, grads);
    if (!std::isfinite(loss))
        throw ValidationError("train_step: non-finite loss at step " +
                              std::to_string(opt.step + 1));
    adam_update(params, opt, grads, cfg);
    return loss;
}

/// Central finite differences on a random coordinate subsample against the
/// analytic gradient. Every parameter tensor contributes coordinates.
inline double gradient_check(const ModelParameters& params, const SerializedExample& ex,
                             PooledCache& cache, double epsilon = 1e-5, int n_coords = 200,
                             uint64_t seed = 7) {
    ModelParameters grads = zeros_like(params);
    std::vector<SerializedExample> batch = {ex};
    batch_loss_and_grad(params, batch, cache, grads);

    ModelParameters probe = params;
    std::vector<Tensor*> tensors;
    std::vector<const Tensor*> gtensors;
    probe.for_each_tensor([&](const std::string&, Tensor& t) { tensors.push_back(&t); });
    grads.for_each_tensor([&](const std::string&, const Tensor& t) { gtensors.push_back(&t); });

    Rng rng(seed);
    std::vector<std::pair<size_t, size_t>> coords; // (tensor index, flat index)
    for (size_t k = 0; k < tensors.size(); ++k)
        coords.emplace_back(k, std::uniform_int_distribution<size_t>(
                                   0, tensors[k]->v.size() - 1)(rng));
    std::uniform_int_distribution<size_t> tdist(0, tensors.size() - 1);
    while (static_cast<int>(coords.size()) < n_coords) {
        size_t k = tdist(rng);
        coords.emplace_back(
            k, std::uniform_int_distribution<size_t>(0, tensors[k]->v.size() - 1)(rng));
    }

    double max_rel = 0.0;
    for (auto [k, i] : coords) {
        double orig = tensors[k]->v[i];
        tensors[k]->v[i] = orig + epsilon;
        double lp = mean_nll(probe, batch, cache);
        tensors[k]->v[i] = orig - epsilon;
        double lm = mean_nll(probe, batch, cache);
        tensors[k]->v[i] = orig;
        double fd = (lp - lm) / (2.0 * epsilon);
        double an = gtensors[k]->v[i];
        double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

struct TrainLogEntry {
    long step = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
};

struct TrainResult {
    ModelParameters best_params;
    double best_dev_loss = 0.0;
    long best_step = 0;
    std::vector<TrainLogEntry> log;
};

/// Seeded-shuffle training over the train split, keeping the checkpoint with
/// the lowest dev loss.
inline TrainResult train(const TrainConfig& cfg, const std::vector<SerializedExample>& train_set,
                         const std::vector<SerializedExample>& dev_set, PooledCache& cache,
                         ModelParameters params) {
    cfg.validate();
    if (train_set.empty()) throw ValidationError("train: empty train split");
    OptimizerState opt(params);
    Rng order_rng(cfg.seed);

    TrainResult result;
    result.best_params = params;
    result.best_dev_loss = dev_set.empty() ? std::numeric_limits<double>::infinity()
                                           : mean_nll(params, dev_set, cache);
    result.best_step = 0;

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    size_t cursor = order.size(); // force an initial shuffle

    double running_loss = 0.0;
    int running_count = 0;
    for (long step = 1; step <= cfg.max_steps; ++step) {
        std::vector<SerializedExample> batch;
        batch.reserve(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), order_rng);
                cursor = 0;
            }
            batch.push_back(train_set[order[cursor++]]);
        }
        double loss = train_step(params, opt, batch, cache, cfg);
        running_loss += loss;
        ++running_count;
        if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
            double dev_loss =
                dev_set.empty() ? running_loss / running_count : mean_nll(params, dev_set, cache);
            result.log.push_back({step, running_loss / running_count, dev_loss});
            running_loss = 0.0;
            running_count = 0;
            if (dev_loss < result.best_dev_loss) {
                result.best_dev_loss = dev_loss;
                result.best_step = step;
                result.best_params = params;
            }
        }
    }
    if (cfg.max_steps == 0) result.best_params = params;
    return result;
}

} // namespace sermux

#endif
