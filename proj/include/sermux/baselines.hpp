#ifndef SERMUX_BASELINES_HPP
#define SERMUX_BASELINES_HPP

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "sermux/assembler.hpp"
#include "sermux/common.hpp"
#include "sermux/corpus.hpp"
#include "sermux/model.hpp"
#include "sermux/trainer.hpp"
#include "sermux/vocab.hpp"

namespace sermux {

inline std::vector<SentimentLabel> random_baseline(uint64_t seed, long n) {
    Rng rng(seed);
    std::uniform_int_distribution<int> dist(0, 2);
    std::vector<SentimentLabel> out;
    out.reserve(n);
    for (long i = 0; i < n; ++i) out.push_back(sentiment_from_code(dist(rng)));
    return out;
}

struct ClassifierSpec {
    enum class Modality { Text, Speech, TextSpeech };
    enum class Target { Current, Response };
    Modality modality = Modality::Text;
    Target target = Target::Current;
};

inline const char* modality_name(ClassifierSpec::Modality m) {
    switch (m) {
        case ClassifierSpec::Modality::Text: return "T";
        case ClassifierSpec::Modality::Speech: return "S";
        case ClassifierSpec::Modality::TextSpeech: return "T+S";
    }
    return "?";
}

/// Transformer backbone with a 3-way linear head over mean-pooled hidden states.
struct Classifier {
    ClassifierSpec spec;
    ModelParameters backbone;
    Tensor head_w; // 3 x model_dim
    Tensor head_b; // 3 x 1

    template <class F>
    void for_each_tensor(F&& f) {
        backbone.for_each_tensor(f);
        f("head_w", head_w);
        f("head_b", head_b);
    }
};

inline Classifier init_classifier(const ClassifierSpec& spec, const ModelConfig& cfg,
                                  uint64_t seed) {
    Classifier c;
    c.spec = spec;
    c.backbone = init_parameters(cfg, seed);
    c.head_w = Tensor(3, cfg.model_dim);
    c.head_b = Tensor(3, 1);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    c.head_w.fill_normal(rng, kInitStd);
    return c;
}

/// Current-turn-only classifier input (no context history).
inline std::vector<PromptElement> classifier_input(const Turn& turn,
                                                   ClassifierSpec::Modality modality,
                                                   const Vocabulary& vocab) {
    std::vector<PromptElement> prompt;
    if (modality != ClassifierSpec::Modality::Speech) {
        for (TokenId id : vocab.encode(turn.words)) prompt.push_back(PromptElement::tok(id));
        prompt.push_back(PromptElement::tok(kEotId));
    }
    if (modality != ClassifierSpec::Modality::Text)
        prompt.push_back(PromptElement::slot(turn.features_ref));
    return prompt;
}

namespace detail {

inline std::vector<double> classifier_logits(const Classifier& c,
                                             const std::vector<InputItem>& items,
                                             ForwardTape& tape) {
    const Tensor& hidden = forward_hidden(c.backbone, items, tape);
    std::vector<double> pooled(hidden.cols, 0.0);
    for (int t = 0; t < hidden.rows; ++t)
        for (int i = 0; i < hidden.cols; ++i) pooled[i] += hidden.at(t, i);
    for (auto& x : pooled) x /= hidden.rows;
    std::vector<double> logits(3);
    for (int k = 0; k < 3; ++k)
        logits[k] = dot(c.head_w.row(k), pooled.data(), hidden.cols) + c.head_b.v[k];
    return logits;
}

/// NLL of the gold label; accumulates gradients of the summed NLL.
inline double classifier_nll_and_grad(const Classifier& c, const std::vector<InputItem>& items,
                                      SentimentLabel gold, Classifier* grads) {
    ForwardTape tape;
    auto logits = classifier_logits(c, items, tape);
    auto ls = log_softmax_row(logits.data(), 3);
    double nll = -ls[code(gold)];
    if (!grads) return nll;

    std::vector<double> dlogits(3);
    for (int k = 0; k < 3; ++k) dlogits[k] = std::exp(ls[k]);
    dlogits[code(gold)] -= 1.0;

    const Tensor& hidden = tape.hidden;
    std::vector<double> pooled(hidden.cols, 0.0);
    for (int t = 0; t < hidden.rows; ++t)
        for (int i = 0; i < hidden.cols; ++i) pooled[i] += hidden.at(t, i);
    for (auto& x : pooled) x /= hidden.rows;

    Tensor dhidden(hidden.rows, hidden.cols);
    for (int k = 0; k < 3; ++k) {
        grads->head_b.v[k] += dlogits[k];
        double* dwr = grads->head_w.row(k);
        const double* wr = c.head_w.row(k);
        for (int i = 0; i < hidden.cols; ++i) {
            dwr[i] += dlogits[k] * pooled[i];
            double dp = dlogits[k] * wr[i] / hidden.rows;
            for (int t = 0; t < hidden.rows; ++t) dhidden.at(t, i) += dp;
        }
    }
    backward_from_hidden(c.backbone, tape, dhidden, grads->backbone);
    return nll;
}

} // namespace detail

struct ClassifierExample {
    std::vector<PromptElement> input;
    SentimentLabel label = SentimentLabel::Neutral;
};

/// One example per (dialogue, n) with n in 0..len-2, matching the serialized
/// pipeline's example set; target=response uses turn n+1's label.
inline std::vector<ClassifierExample> classifier_dataset(const Corpus& corpus, Split split,
                                                         const ClassifierSpec& spec,
                                                         const Vocabulary& vocab) {
    std::vector<ClassifierExample> out;
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != split) continue;
        for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n) {
            ClassifierExample ex;
            ex.input = classifier_input(dlg.turns[n], spec.modality, vocab);
            ex.label = spec.target == ClassifierSpec::Target::Current ? dlg.turns[n].label
                                                                      : dlg.turns[n + 1].label;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

inline double classifier_mean_nll(const Classifier& c,
                                  const std::vector<ClassifierExample>& examples,
                                  PooledCache& cache) {
    if (examples.empty()) throw ValidationError("classifier_mean_nll: empty example set");
    double total = 0.0;
    for (const auto& ex : examples) {
        auto items = resolve_prompt(ex.input, cache);
        total += detail::classifier_nll_and_grad(c, items, ex.label, nullptr);
    }
    return total / examples.size();
}

inline Classifier train_classifier(const ClassifierSpec& spec, const Corpus& corpus,
                                   const Vocabulary& vocab, const ModelConfig& model_cfg,
                                   const TrainConfig& cfg, PooledCache& cache) {
    cfg.validate();
    auto train_set = classifier_dataset(corpus, Split::Train, spec, vocab);
    auto dev_set = classifier_dataset(corpus, Split::Dev, spec, vocab);
    if (train_set.empty()) throw ValidationError("train_classifier: empty train split");

    Classifier c = init_classifier(spec, model_cfg, cfg.seed);
    Classifier moment1 = c, moment2 = c;
    moment1.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });
    moment2.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });

    Classifier best = c;
    double best_dev = dev_set.empty() ? std::numeric_limits<double>::infinity()
                                      : classifier_mean_nll(c, dev_set, cache);

    Rng order_rng(cfg.seed);
    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    size_t cursor = order.size();
    for (long step = 1; step <= cfg.max_steps; ++step) {
        Classifier grads = c;
        grads.for_each_tensor([](const std::string&, Tensor& t) { t.fill(0.0); });
        double loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (cursor >= order.size()) {
                std::shuffle(order.begin(), order.end(), order_rng);
                cursor = 0;
            }
            const auto& ex = train_set[order[cursor++]];
            auto items = resolve_prompt(ex.input, cache);
            loss += detail::classifier_nll_and_grad(c, items, ex.label, &grads);
        }
        loss /= cfg.batch_size;
        if (!std::isfinite(loss))
            throw ValidationError("train_classifier: non-finite loss at step " +
                                  std::to_string(step));
        grads.for_each_tensor(
            [&](const std::string&, Tensor& t) {
                for (auto& x : t.v) x /= cfg.batch_size;
            });
        std::vector<Tensor*> ps, ms, vs;
        std::vector<const Tensor*> gs;
        c.for_each_tensor([&](const std::string&, Tensor& t) { ps.push_back(&t); });
        moment1.for_each_tensor([&](const std::string&, Tensor& t) { ms.push_back(&t); });
        moment2.for_each_tensor([&](const std::string&, Tensor& t) { vs.push_back(&t); });
        grads.for_each_tensor([&](const std::string&, const Tensor& t) { gs.push_back(&t); });
        adam_update_tensors(ps, ms, vs, gs, cfg, step);

        if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
            double dev = dev_set.empty() ? loss : classifier_mean_nll(c, dev_set, cache);
            if (dev < best_dev) {
                best_dev = dev;
                best = c;
            }
        }
    }
    if (cfg.max_steps == 0) best = c;
    return best;
}

/// Argmax of the 3-way head, ties toward the lowest class code.
inline SentimentLabel classify(const Classifier& c, const Dialogue& dlg, int n,
                               const Vocabulary& vocab, PooledCache& cache) {
    auto prompt = classifier_input(dlg.turns[n], c.spec.modality, vocab);
    auto items = resolve_prompt(prompt, cache);
    ForwardTape tape;
    auto logits = detail::classifier_logits(c, items, tape);
    int best = 0;
    for (int k = 1; k < 3; ++k)
        if (logits[k] > logits[best]) best = k;
    return sentiment_from_code(best);
}

} // namespace sermux

#endif
