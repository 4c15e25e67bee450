#ifndef SERMUX_GENERATOR_HPP
#define SERMUX_GENERATOR_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sermux/assembler.hpp"
#include "sermux/common.hpp"
#include "sermux/model.hpp"
#include "sermux/vocab.hpp"

namespace sermux {

struct GenerationConfig {
    enum class Mode { Greedy, Sample };
    Mode mode = Mode::Greedy;
    double temperature = 1.0;
    int max_new_tokens = 24;
    uint64_t seed = 1;

    void validate() const {
        if (max_new_tokens < 1)
            throw ValidationError("GenerationConfig: max_new_tokens must be >= 1");
        if (mode == Mode::Sample && temperature <= 0.0)
            throw ValidationError("GenerationConfig: temperature must be > 0 when sampling");
    }
};

/// Argmax with ties broken toward the lowest id.
inline TokenId argmax_token(const double* logits, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

inline std::vector<TokenId> generate(const ModelParameters& params,
                                     const std::vector<PromptElement>& prompt, PooledCache& cache,
                                     const GenerationConfig& cfg) {
    cfg.validate();
    auto items = resolve_prompt(prompt, cache);
    Rng rng(cfg.seed);
    std::vector<TokenId> out;
    for (int step = 0; step < cfg.max_new_tokens; ++step) {
        if (static_cast<int>(items.size()) >= params.cfg.max_positions) break;
        ForwardTape tape;
        Tensor logits = forward_logits(params, items, tape);
        const double* last = logits.row(logits.rows - 1);
        TokenId next;
        if (cfg.mode == GenerationConfig::Mode::Greedy) {
            next = argmax_token(last, logits.cols);
        } else {
            std::vector<double> scaled(logits.cols);
            for (int i = 0; i < logits.cols; ++i) scaled[i] = last[i] / cfg.temperature;
            auto ls = log_softmax_row(scaled.data(), logits.cols);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            double u = unit(rng), acc = 0.0;
            next = logits.cols - 1;
            for (int i = 0; i < logits.cols; ++i) {
                acc += std::exp(ls[i]);
                if (u < acc) {
                    next = i;
                    break;
                }
            }
        }
        out.push_back(next);
        if (next == kEosId) break;
        InputItem it;
        it.token = next;
        items.push_back(std::move(it));
    }
    return out;
}

struct ParsedPrediction {
    std::optional<SentimentLabel> current_label;
    std::optional<SentimentLabel> response_label;
    std::vector<std::string> response_words;
    bool malformed = false;
};

/// Extracts sentiment markers and response text per the ordering's grammar.
/// Deviations set `malformed`; missing labels fall back to neutral.
inline ParsedPrediction parse_output(const std::vector<TokenId>& tokens, TaskOrdering ordering,
                                     const Vocabulary& vocab) {
    ParsedPrediction pred;
    size_t i = 0;
    auto take_marker = [&]() -> std::optional<SentimentLabel> {
        if (i < tokens.size() && is_marker_id(tokens[i])) return label_of_marker(tokens[i++]);
        pred.malformed = true;
        return std::nullopt;
    };
    // words until <eos>, a marker, or end of stream; stray specials are skipped
    auto take_text = [&](bool stop_at_marker) {
        while (i < tokens.size() && tokens[i] != kEosId) {
            TokenId id = tokens[i];
            if (is_marker_id(id)) {
                if (stop_at_marker) return;
                pred.malformed = true; // misplaced marker inside text
                ++i;
                continue;
            }
            if (id == kEotId || id == kPadId || id == kSpeechId) {
                pred.malformed = true;
                ++i;
                continue;
            }
            pred.response_words.push_back(vocab.token(id));
            ++i;
        }
    };
    auto take_eos = [&]() {
        if (i < tokens.size() && tokens[i] == kEosId)
            ++i;
        else
            pred.malformed = true;
    };

    switch (ordering) {
        case TaskOrdering::CurrRespText:
            pred.current_label = take_marker();
            pred.response_label = take_marker();
            take_text(false);
            take_eos();
            break;
        case TaskOrdering::CurrTextResp:
            pred.current_label = take_marker();
            take_text(true);
            pred.response_label = take_marker();
            take_eos();
            break;
        case TaskOrdering::RespText:
            pred.response_label = take_marker();
            take_text(false);
            take_eos();
            break;
        case TaskOrdering::TextOnly:
            take_text(false);
            take_eos();
            break;
    }
    if (i < tokens.size()) pred.malformed = true; // trailing tokens after <eos>

    // fallback labels for whatever the ordering was supposed to predict
    if (ordering_predicts_current(ordering) && !pred.current_label)
        pred.current_label = SentimentLabel::Neutral;
    if (ordering_predicts_response_label(ordering) && !pred.response_label)
        pred.response_label = SentimentLabel::Neutral;
    return pred;
}

inline ParsedPrediction predict_turn(const ModelParameters& params, const Dialogue& dlg, int n,
                                     const AssemblyConfig& assembly_cfg,
                                     const GenerationConfig& gen_cfg, const Vocabulary& vocab,
                                     PooledCache& cache) {
    SerializedExample ex =
        truncate(assemble_example(dlg, n, assembly_cfg, vocab), assembly_cfg.max_positions);
    auto tokens = generate(params, ex.prompt, cache, gen_cfg);
    return parse_output(tokens, assembly_cfg.ordering, vocab);
}

} // namespace sermux

#endif
