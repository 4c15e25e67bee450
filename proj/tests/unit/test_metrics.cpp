#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "sermux/metrics.hpp"

using namespace sermux;

namespace {

using Sent = std::vector<std::string>;

/// Independent BLEU-4 implementation keyed on joined n-gram strings.
double reference_bleu4(const std::vector<Sent>& hyps, const std::vector<Sent>& refs) {
    long hyp_len = 0, ref_len = 0;
    std::array<long, 4> matched = {}, total = {};
    for (size_t k = 0; k < hyps.size(); ++k) {
        hyp_len += static_cast<long>(hyps[k].size());
        ref_len += static_cast<long>(refs[k].size());
        for (int n = 1; n <= 4; ++n) {
            auto grams = [&](const Sent& s) {
                std::map<std::string, long> counts;
                for (size_t i = 0; i + n <= s.size(); ++i) {
                    std::string key;
                    for (int j = 0; j < n; ++j) key += s[i + j] + "\x1f";
                    counts[key]++;
                }
                return counts;
            };
            auto h = grams(hyps[k]), r = grams(refs[k]);
            for (const auto& [key, count] : h) {
                total[n - 1] += count;
                auto it = r.find(key);
                if (it != r.end()) matched[n - 1] += std::min(count, it->second);
            }
        }
    }
    double log_prec = 0.0;
    int orders = 0;
    for (int n = 0; n < 4; ++n) {
        if (total[n] == 0) continue;
        if (matched[n] == 0) return 0.0;
        log_prec += std::log(static_cast<double>(matched[n]) / total[n]);
        ++orders;
    }
    if (orders == 0 || hyp_len == 0) return 0.0;
    double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
    return bp * std::exp(log_prec / orders);
}

Sent words(const std::string& s) { return split_words(s); }

} // namespace

TEST_CASE("unweighted accuracy is the mean per-class recall") {
    ConfusionMatrix cm;
    cm.counts = {{{3, 1, 0}, {1, 2, 1}, {0, 0, 2}}};
    // recalls: 3/4, 2/4, 2/2
    REQUIRE(std::abs(unweighted_accuracy(cm) - 0.75) < 1e-12);
}

TEST_CASE("classes without support are left out of the mean") {
    ConfusionMatrix cm;
    cm.counts = {{{4, 0, 0}, {0, 0, 0}, {1, 0, 3}}};
    // recalls over supported classes: 1.0 and 0.75
    REQUIRE(std::abs(unweighted_accuracy(cm) - 0.875) < 1e-12);
    ConfusionMatrix empty;
    REQUIRE_THROWS_AS(unweighted_accuracy(empty), ValidationError);
}

TEST_CASE("unweighted accuracy ignores class imbalance") {
    // 90 of 100 gold-neutral correct, 1 of 10 gold-positive correct
    ConfusionMatrix cm;
    cm.counts[code(SentimentLabel::Neutral)] = {5, 90, 5};
    cm.counts[code(SentimentLabel::Positive)] = {1, 9, 0};
    double ua = unweighted_accuracy(cm);
    REQUIRE(std::abs(ua - (0.9 + 0.1) / 2.0) < 1e-12);
}

TEST_CASE("bleu is one for identical corpora") {
    REQUIRE(bleu4({words("a b c d e")}, {words("a b c d e")}) == 1.0);
    // hypotheses shorter than 4 tokens still score 1 against themselves
    REQUIRE(bleu4({words("a b")}, {words("a b")}) == 1.0);
}

TEST_CASE("bleu matches hand-computed fixtures") {
    SECTION("no 4-gram match means zero without smoothing") {
        REQUIRE(bleu4({words("the cat sat on the mat")},
                      {words("the cat is on the mat")}) == 0.0);
    }
    SECTION("single substitution at the tail") {
        // p1..p4 = 4/5, 3/4, 2/3, 1/2 and equal lengths
        double expected = std::pow(0.2, 0.25);
        REQUIRE(std::abs(bleu4({words("a b c d e")}, {words("a b c d f")}) - expected) <
                1e-12);
    }
    SECTION("brevity penalty for a short hypothesis") {
        // p1 = p2 = 1, orders 3-4 excluded, BP = exp(1 - 4/2)
        REQUIRE(std::abs(bleu4({words("a b")}, {words("a b c d")}) - std::exp(-1.0)) <
                1e-12);
    }
    SECTION("clipping caps repeated hypothesis n-grams") {
        // hyp "a a a a" vs ref "a b c a": unigram matched clipped to 2
        double got = bleu4({words("a a a a")}, {words("a b c a")});
        // bigram "a a" never matches -> zero
        REQUIRE(got == 0.0);
    }
    SECTION("empty hypotheses score zero") {
        REQUIRE(bleu4({{}}, {words("a b")}) == 0.0);
    }
}

TEST_CASE("bleu agrees with an independent implementation on random corpora") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(0, 9), word(0, 5);
    const char* lex[] = {"aa", "bb", "cc", "dd", "ee", "ff"};
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<Sent> hyps, refs;
        int pairs = 1 + static_cast<int>(rng() % 6);
        for (int k = 0; k < pairs; ++k) {
            Sent h, r;
            for (int i = len(rng); i > 0; --i) h.push_back(lex[word(rng)]);
            for (int i = 1 + len(rng); i > 0; --i) r.push_back(lex[word(rng)]);
            hyps.push_back(h);
            refs.push_back(r);
        }
        REQUIRE(std::abs(bleu4(hyps, refs) - reference_bleu4(hyps, refs)) < 1e-12);
    }
}

TEST_CASE("evaluate aggregates labels, bleu and malformed rate") {
    std::vector<ParsedPrediction> preds(4);
    std::vector<GoldTriple> golds(4);
    for (int i = 0; i < 4; ++i) {
        golds[i].current_label = SentimentLabel::Positive;
        golds[i].response_label = SentimentLabel::Negative;
        golds[i].response_words = words("good game today");
        preds[i].current_label = SentimentLabel::Positive;
        preds[i].response_label =
            i < 2 ? SentimentLabel::Negative : SentimentLabel::Neutral;
        preds[i].response_words = words("good game today");
    }
    preds[3].malformed = true;
    EvalReport r = evaluate(preds, golds, TaskOrdering::CurrRespText);
    REQUIRE(r.n_examples == 4);
    REQUIRE(r.curr_ua.has_value());
    REQUIRE(*r.curr_ua == 1.0);
    REQUIRE(*r.resp_ua == 0.5);
    REQUIRE(r.bleu == 1.0);
    REQUIRE(std::abs(r.malformed_rate - 0.25) < 1e-12);

    SECTION("text_only reports no label metrics") {
        EvalReport t = evaluate(preds, golds, TaskOrdering::TextOnly);
        REQUIRE_FALSE(t.curr_ua.has_value());
        REQUIRE_FALSE(t.resp_ua.has_value());
    }
    SECTION("resp_text reports only the response metric") {
        EvalReport t = evaluate(preds, golds, TaskOrdering::RespText);
        REQUIRE_FALSE(t.curr_ua.has_value());
        REQUIRE(t.resp_ua.has_value());
    }
    SECTION("count mismatch is rejected") {
        preds.pop_back();
        REQUIRE_THROWS_AS(evaluate(preds, golds, TaskOrdering::CurrRespText),
                          ValidationError);
    }
}

TEST_CASE("eval reports round-trip through json") {
    EvalReport r;
    r.curr_ua = 0.7;
    r.resp_ua = 0.41;
    r.bleu = 0.145;
    r.malformed_rate = 0.03;
    ConfusionMatrix cm;
    cm.counts = {{{5, 1, 0}, {2, 7, 1}, {0, 1, 3}}};
    r.curr_cm = cm;
    r.n_examples = 20;
    r.config_fingerprint = 0xdeadbeefULL;
    nlohmann::json j = r;
    EvalReport s = j.get<EvalReport>();
    REQUIRE(s.curr_ua == r.curr_ua);
    REQUIRE(s.resp_ua == r.resp_ua);
    REQUIRE(s.bleu == r.bleu);
    REQUIRE(s.malformed_rate == r.malformed_rate);
    REQUIRE(s.curr_cm->counts == cm.counts);
    REQUIRE_FALSE(s.resp_cm.has_value());
    REQUIRE(s.n_examples == 20);
    REQUIRE(s.config_fingerprint == r.config_fingerprint);
    REQUIRE(j.at("bleu_x100").get<double>() == r.bleu * 100.0);
}
