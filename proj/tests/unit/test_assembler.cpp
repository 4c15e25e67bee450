#include <catch2/catch_amalgamated.hpp>

#include "sermux/assembler.hpp"
#include "sermux/generator.hpp"

using namespace sermux;

namespace {

Dialogue five_turn_dialogue() {
    Dialogue d;
    d.id = "d0";
    const char* texts[5] = {"good game", "bad call", "i see", "so happy", "what a mess"};
    SentimentLabel labels[5] = {SentimentLabel::Positive, SentimentLabel::Negative,
                                SentimentLabel::Neutral, SentimentLabel::Positive,
                                SentimentLabel::Negative};
    for (int t = 0; t < 5; ++t) {
        Turn turn;
        turn.speaker = t % 2 ? 'B' : 'A';
        turn.words = split_words(texts[t]);
        turn.label = labels[t];
        turn.features_ref = "d0_t" + std::to_string(t);
        turn.frame_count = 3;
        d.turns.push_back(turn);
    }
    return d;
}

Corpus wrap(const Dialogue& d) {
    Corpus c;
    c.dialogues.push_back(d);
    return c;
}

std::vector<TokenId> token_ids(const std::vector<PromptElement>& prompt) {
    std::vector<TokenId> ids;
    for (const auto& e : prompt) ids.push_back(e.token);
    return ids;
}

} // namespace

TEST_CASE("w=0 prompt is current turn text, <eot>, speech slot") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig cfg;
    cfg.window = 0;
    cfg.use_context_text = false;
    SerializedExample ex = assemble_example(d, 2, cfg, v);

    auto expected = v.encode("i see");
    REQUIRE(ex.prompt.size() == expected.size() + 2);
    for (size_t i = 0; i < expected.size(); ++i) REQUIRE(ex.prompt[i].token == expected[i]);
    REQUIRE(ex.prompt[expected.size()].token == kEotId);
    REQUIRE(ex.prompt.back().is_slot());
    REQUIRE(ex.prompt.back().slot_ref == "d0_t2");

    // target Ln -> Ln+1 -> Tn+1 <eos>
    std::vector<TokenId> target = {marker_id(SentimentLabel::Neutral),
                                   marker_id(SentimentLabel::Positive)};
    for (TokenId id : v.encode("so happy")) target.push_back(id);
    target.push_back(kEosId);
    REQUIRE(ex.target == target);
}

TEST_CASE("w=1 with all flags lays out text, <eot>, label, slot per context turn") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig cfg;
    cfg.window = 1;
    SerializedExample ex = assemble_example(d, 2, cfg, v);

    std::vector<PromptElement> expected;
    for (TokenId id : v.encode("bad call")) expected.push_back(PromptElement::tok(id));
    expected.push_back(PromptElement::tok(kEotId));
    expected.push_back(PromptElement::tok(marker_id(SentimentLabel::Negative)));
    expected.push_back(PromptElement::slot("d0_t1"));
    for (TokenId id : v.encode("i see")) expected.push_back(PromptElement::tok(id));
    expected.push_back(PromptElement::tok(kEotId));
    expected.push_back(PromptElement::slot("d0_t2"));

    REQUIRE(ex.prompt.size() == expected.size());
    for (size_t i = 0; i < expected.size(); ++i) {
        REQUIRE(ex.prompt[i].token == expected[i].token);
        REQUIRE(ex.prompt[i].slot_ref == expected[i].slot_ref);
    }
}

TEST_CASE("resp_text ordering emits no current-label marker") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig cfg;
    cfg.ordering = TaskOrdering::RespText;
    SerializedExample ex = assemble_example(d, 0, cfg, v);
    REQUIRE(ex.target.front() == marker_id(SentimentLabel::Negative)); // L_{n+1}
    REQUIRE_FALSE(ex.gold.current_label.has_value());
    // exactly one marker in the whole target
    int markers = 0;
    for (TokenId id : ex.target) markers += is_marker_id(id) ? 1 : 0;
    REQUIRE(markers == 1);
}

TEST_CASE("loss mask is true exactly over the target region") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    SerializedExample ex = assemble_example(d, 1, AssemblyConfig{}, v);
    REQUIRE(ex.loss_mask.size() == ex.prompt.size() + ex.target.size());
    for (size_t i = 0; i < ex.prompt.size(); ++i) REQUIRE_FALSE(ex.loss_mask[i]);
    for (size_t i = ex.prompt.size(); i < ex.loss_mask.size(); ++i) REQUIRE(ex.loss_mask[i]);
    REQUIRE(ex.target.back() == kEosId);
    // no slot ever sits in the target region
    for (const auto& e : ex.prompt) (void)e;
}

TEST_CASE("disabling one flag removes exactly that element class") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig all;
    all.window = 2;
    SerializedExample full = assemble_example(d, 3, all, v);

    AssemblyConfig no_sent = all;
    no_sent.use_context_sentiment = false;
    SerializedExample ns = assemble_example(d, 3, no_sent, v);
    std::vector<PromptElement> filtered;
    for (const auto& e : full.prompt)
        if (!(is_marker_id(e.token) && !e.is_slot())) filtered.push_back(e);
    REQUIRE(ns.prompt.size() == filtered.size());
    for (size_t i = 0; i < filtered.size(); ++i) {
        REQUIRE(ns.prompt[i].token == filtered[i].token);
        REQUIRE(ns.prompt[i].slot_ref == filtered[i].slot_ref);
    }

    AssemblyConfig no_speech = all;
    no_speech.use_context_speech = false;
    no_speech.use_current_speech = false;
    SerializedExample nsp = assemble_example(d, 3, no_speech, v);
    for (const auto& e : nsp.prompt) REQUIRE_FALSE(e.is_slot());
    int full_slots = 0;
    for (const auto& e : full.prompt) full_slots += e.is_slot();
    REQUIRE(full.prompt.size() - nsp.prompt.size() == static_cast<size_t>(full_slots));
}

TEST_CASE("w=0 prompt is the current-turn suffix of the w=4 prompt") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig wide;
    wide.window = 4;
    AssemblyConfig narrow;
    narrow.window = 0;
    narrow.use_context_text = false;
    SerializedExample w4 = assemble_example(d, 3, wide, v);
    SerializedExample w0 = assemble_example(d, 3, narrow, v);
    REQUIRE(w0.prompt.size() <= w4.prompt.size());
    size_t offset = w4.prompt.size() - w0.prompt.size();
    for (size_t i = 0; i < w0.prompt.size(); ++i) {
        REQUIRE(w0.prompt[i].token == w4.prompt[offset + i].token);
        REQUIRE(w0.prompt[i].slot_ref == w4.prompt[offset + i].slot_ref);
    }
    REQUIRE(w0.target == w4.target);
}

TEST_CASE("truncation drops whole old turns first, then current-turn text") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    AssemblyConfig cfg;
    cfg.window = 4;
    SerializedExample ex = assemble_example(d, 3, cfg, v);

    SECTION("within the limit is the identity") {
        SerializedExample t = truncate(ex, 320);
        REQUIRE(t.prompt.size() == ex.prompt.size());
        REQUIRE(t.target == ex.target);
    }
    SECTION("one turn over the limit removes exactly the oldest turn") {
        int oldest = ex.context_turn_sizes.front();
        SerializedExample t = truncate(ex, ex.total_positions() - 1);
        REQUIRE(ex.prompt.size() - t.prompt.size() == static_cast<size_t>(oldest));
        // remaining prompt is a suffix of the original
        size_t offset = ex.prompt.size() - t.prompt.size();
        for (size_t i = 0; i < t.prompt.size(); ++i)
            REQUIRE(t.prompt[i].token == ex.prompt[offset + i].token);
    }
    SECTION("an overlong current turn is trimmed from the left, target intact") {
        Dialogue long_d = five_turn_dialogue();
        for (int i = 0; i < 50; ++i) long_d.turns[3].words.push_back("good");
        SerializedExample lex = assemble_example(long_d, 3, cfg, v);
        int limit = static_cast<int>(lex.target.size()) + 10;
        SerializedExample t = truncate(lex, limit);
        REQUIRE(t.total_positions() == limit);
        REQUIRE(t.target == lex.target);
        REQUIRE(t.context_turn_sizes.empty());
        // length accounting oracle
        REQUIRE(static_cast<int>(t.prompt.size()) == 10);
    }
    SECTION("a target that cannot fit is an error") {
        REQUIRE_THROWS_AS(truncate(ex, static_cast<int>(ex.target.size()) - 1),
                          ValidationError);
    }
}

TEST_CASE("dataset yields one example per turn with a response") {
    Vocabulary v;
    SECTION("two-turn dialogue gives one example") {
        GeneratorSpec spec;
        spec.n_dialogues = 1;
        spec.min_turns = 2;
        spec.max_turns = 2;
        spec.train_fraction = 0.98;
        spec.dev_fraction = 0.01;
        Corpus c = generate_synthetic_corpus(spec);
        Vocabulary vv = build_vocabulary(c, 1);
        REQUIRE(dataset(c, c.dialogues[0].split, AssemblyConfig{}, vv).size() == 1);
    }
    SECTION("five-turn dialogue gives four examples") {
        Dialogue d = five_turn_dialogue();
        Corpus c = wrap(d);
        Vocabulary vv = build_vocabulary(c, 1);
        REQUIRE(dataset(c, Split::Train, AssemblyConfig{}, vv).size() == 4);
    }
    SECTION("example count over a generated corpus matches the counting oracle") {
        GeneratorSpec spec;
        spec.n_dialogues = 100;
        spec.seed = 31;
        Corpus c = generate_synthetic_corpus(spec);
        Vocabulary vv = build_vocabulary(c, 1);
        for (auto split : {Split::Train, Split::Dev, Split::Test}) {
            long expected = 0;
            for (const auto& dlg : c.dialogues)
                if (dlg.split == split) expected += static_cast<long>(dlg.turns.size()) - 1;
            REQUIRE(static_cast<long>(dataset(c, split, AssemblyConfig{}, vv).size()) ==
                    expected);
        }
    }
}

TEST_CASE("gold targets round-trip through the output parser for every ordering") {
    GeneratorSpec spec;
    spec.n_dialogues = 30;
    spec.seed = 77;
    Corpus c = generate_synthetic_corpus(spec);
    Vocabulary v = build_vocabulary(c, 1);
    for (TaskOrdering ordering : {TaskOrdering::CurrRespText, TaskOrdering::CurrTextResp,
                                  TaskOrdering::RespText, TaskOrdering::TextOnly}) {
        AssemblyConfig cfg;
        cfg.ordering = ordering;
        for (const auto& dlg : c.dialogues) {
            for (int n = 0; n + 1 < static_cast<int>(dlg.turns.size()); ++n) {
                SerializedExample ex = assemble_example(dlg, n, cfg, v);
                ParsedPrediction parsed = parse_output(ex.target, ordering, v);
                REQUIRE_FALSE(parsed.malformed);
                REQUIRE(parsed.current_label == ex.gold.current_label);
                REQUIRE(parsed.response_label == ex.gold.response_label);
                REQUIRE(parsed.response_words == ex.gold.response_words);
            }
        }
    }
}

TEST_CASE("out-of-range turn index is rejected") {
    Dialogue d = five_turn_dialogue();
    Vocabulary v = build_vocabulary(wrap(d), 1);
    REQUIRE_THROWS_AS(assemble_example(d, 4, AssemblyConfig{}, v), ValidationError);
    REQUIRE_THROWS_AS(assemble_example(d, -1, AssemblyConfig{}, v), ValidationError);
}
