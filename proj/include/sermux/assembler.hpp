#ifndef SERMUX_ASSEMBLER_HPP
#define SERMUX_ASSEMBLER_HPP

#include <optional>
#include <string>
#include <vector>

#include "sermux/common.hpp"
#include "sermux/corpus.hpp"
#include "sermux/sentiment.hpp"
#include "sermux/vocab.hpp"

namespace sermux {

/// One prompt position: a vocabulary token or a continuous embedding slot
/// resolved to a projected speech vector at forward time.
struct PromptElement {
    TokenId token = -1;
    std::string slot_ref; // nonempty iff this is an embedding slot

    bool is_slot() const { return !slot_ref.empty(); }

    static PromptElement tok(TokenId id) {
        PromptElement e;
        e.token = id;
        return e;
    }
    static PromptElement slot(std::string ref) {
        PromptElement e;
        e.token = kSpeechId;
        e.slot_ref = std::move(ref);
        return e;
    }
};

enum class TaskOrdering {
    CurrRespText, // Ln -> Ln+1 -> Tn+1 (proposed)
    CurrTextResp, // Ln -> Tn+1 -> Ln+1
    RespText,     // Ln+1 -> Tn+1
    TextOnly,     // Tn+1 (LM-only baseline)
};

inline const char* ordering_name(TaskOrdering o) {
    switch (o) {
        case TaskOrdering::CurrRespText: return "curr_resp_text";
        case TaskOrdering::CurrTextResp: return "curr_text_resp";
        case TaskOrdering::RespText: return "resp_text";
        case TaskOrdering::TextOnly: return "text_only";
    }
    return "?";
}

inline TaskOrdering ordering_from_name(const std::string& s) {
    if (s == "curr_resp_text") return TaskOrdering::CurrRespText;
    if (s == "curr_text_resp") return TaskOrdering::CurrTextResp;
    if (s == "resp_text") return TaskOrdering::RespText;
    if (s == "text_only") return TaskOrdering::TextOnly;
    throw FormatError("unknown task ordering: " + s);
}

inline bool ordering_predicts_current(TaskOrdering o) {
    return o == TaskOrdering::CurrRespText || o == TaskOrdering::CurrTextResp;
}

inline bool ordering_predicts_response_label(TaskOrdering o) {
    return o != TaskOrdering::TextOnly;
}

struct AssemblyConfig {
    int window = 4;
    int max_positions = 320;
    bool use_context_text = true;
    bool use_context_speech = true;
    bool use_context_sentiment = true;
    bool use_current_speech = true;
    TaskOrdering ordering = TaskOrdering::CurrRespText;
};

struct GoldTriple {
    std::optional<SentimentLabel> current_label;
    std::optional<SentimentLabel> response_label;
    std::vector<std::string> response_words;
};

struct SerializedExample {
    std::string dialogue_id;
    int turn_index = 0; // the current turn n
    std::vector<PromptElement> prompt;
    std::vector<TokenId> target; // ends with <eos>
    std::vector<bool> loss_mask; // over prompt ++ target, true exactly on target
    GoldTriple gold;
    // element counts per context turn (oldest first) and for the current turn,
    // kept so truncation can drop whole turns
    std::vector<int> context_turn_sizes;
    int current_turn_size = 0;

    int total_positions() const {
        return static_cast<int>(prompt.size() + target.size());
    }

    void rebuild_loss_mask() {
        loss_mask.assign(prompt.size(), false);
        loss_mask.insert(loss_mask.end(), target.size(), true);
    }
};

inline std::vector<TokenId> serialize_target(const GoldTriple& gold, TaskOrdering ordering,
                                             const Vocabulary& vocab) {
    std::vector<TokenId> t;
    auto text = [&] {
        for (TokenId id : vocab.encode(gold.response_words)) t.push_back(id);
    };
    switch (ordering) {
        case TaskOrdering::CurrRespText:
            t.push_back(marker_id(*gold.current_label));
            t.push_back(marker_id(*gold.response_label));
            text();
            break;
        case TaskOrdering::CurrTextResp:
            t.push_back(marker_id(*gold.current_label));
            text();
            t.push_back(marker_id(*gold.response_label));
            break;
        case TaskOrdering::RespText:
            t.push_back(marker_id(*gold.response_label));
            text();
            break;
        case TaskOrdering::TextOnly:
            text();
            break;
    }
    t.push_back(kEosId);
    return t;
}

inline SerializedExample assemble_example(const Dialogue& dlg, int n, const AssemblyConfig& cfg,
                                          const Vocabulary& vocab) {
    if (n < 0 || n + 1 >= static_cast<int>(dlg.turns.size()))
        throw ValidationError("assemble_example: turn index " + std::to_string(n) +
                              " has no response turn in dialogue " + dlg.id);
    SerializedExample ex;
    ex.dialogue_id = dlg.id;
    ex.turn_index = n;

    if (cfg.use_context_text) {
        int first = std::max(0, n - cfg.window);
        for (int k = first; k < n; ++k) {
            const Turn& turn = dlg.turns[k];
            size_t before = ex.prompt.size();
            for (TokenId id : vocab.encode(turn.words))
                ex.prompt.push_back(PromptElement::tok(id));
            ex.prompt.push_back(PromptElement::tok(kEotId));
            if (cfg.use_context_sentiment)
                ex.prompt.push_back(PromptElement::tok(marker_id(turn.label)));
            if (cfg.use_context_speech)
                ex.prompt.push_back(PromptElement::slot(turn.features_ref));
            ex.context_turn_sizes.push_back(static_cast<int>(ex.prompt.size() - before));
        }
    }

    const Turn& current = dlg.turns[n];
    size_t before = ex.prompt.size();
    for (TokenId id : vocab.encode(current.words)) ex.prompt.push_back(PromptElement::tok(id));
    ex.prompt.push_back(PromptElement::tok(kEotId));
    if (cfg.use_current_speech) ex.prompt.push_back(PromptElement::slot(current.features_ref));
    ex.current_turn_size = static_cast<int>(ex.prompt.size() - before);

    const Turn& response = dlg.turns[n + 1];
    ex.gold.response_words = response.words;
    if (ordering_predicts_current(cfg.ordering)) ex.gold.current_label = current.label;
    if (ordering_predicts_response_label(cfg.ordering)) ex.gold.response_label = response.label;
    ex.target = serialize_target(ex.gold, cfg.ordering, vocab);
    ex.rebuild_loss_mask();
    return ex;
}

inline SerializedExample truncate(SerializedExample ex, int max_positions) {
    if (static_cast<int>(ex.target.size()) > max_positions)
        throw ValidationError("truncate: target alone exceeds max_positions");
    // drop whole context turns, oldest first
    while (ex.total_positions() > max_positions && !ex.context_turn_sizes.empty()) {
        int drop = ex.context_turn_sizes.front();
        ex.context_turn_sizes.erase(ex.context_turn_sizes.begin());
        ex.prompt.erase(ex.prompt.begin(), ex.prompt.begin() + drop);
    }
    // then trim current-turn text from the left
    if (ex.total_positions() > max_positions) {
        int excess = ex.total_positions() - max_positions;
        ex.prompt.erase(ex.prompt.begin(), ex.prompt.begin() + excess);
        ex.current_turn_size -= excess;
    }
    ex.rebuild_loss_mask();
    return ex;
}

inline std::vector<SerializedExample> dataset(const Corpus& corpus, Split split,
                                              const AssemblyConfig& cfg,
                                              const Vocabulary& vocab) {
    std::vector<SerializedExample> out;
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != split) continue;
        for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n)
            out.push_back(truncate(assemble_example(dlg, n, cfg, vocab), cfg.max_positions));
    }
    return out;
}

} // namespace sermux

#endif
