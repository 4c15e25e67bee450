#ifndef SERMUX_METRICS_HPP
#define SERMUX_METRICS_HPP

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sermux/assembler.hpp"
#include "sermux/common.hpp"
#include "sermux/generator.hpp"
#include "sermux/sentiment.hpp"

namespace sermux {

struct ConfusionMatrix {
    // rows = gold, columns = predicted
    std::array<std::array<long, 3>, 3> counts = {};

    void add(SentimentLabel gold, SentimentLabel pred) {
        counts[code(gold)][code(pred)]++;
    }
    long total() const {
        long t = 0;
        for (const auto& row : counts)
            for (long c : row) t += c;
        return t;
    }
};

/// Mean of per-class recalls over classes with nonzero support.
inline double unweighted_accuracy(const ConfusionMatrix& cm) {
    double sum = 0.0;
    int supported = 0;
    for (int g = 0; g < 3; ++g) {
        long row = cm.counts[g][0] + cm.counts[g][1] + cm.counts[g][2];
        if (row == 0) continue;
        sum += static_cast<double>(cm.counts[g][g]) / row;
        ++supported;
    }
    if (supported == 0) throw ValidationError("unweighted_accuracy: empty confusion matrix");
    return sum / supported;
}

/// Corpus-level BLEU-4: geometric mean of clipped modified n-gram precisions
/// (n = 1..4) times the brevity penalty, single reference per hypothesis.
/// No smoothing; n-gram orders with no hypothesis n-grams anywhere in the
/// corpus are left out of the geometric mean.
inline double bleu4(const std::vector<std::vector<std::string>>& hypotheses,
                    const std::vector<std::vector<std::string>>& references) {
    if (hypotheses.empty()) throw ValidationError("bleu4: empty corpus");
    if (hypotheses.size() != references.size())
        throw ValidationError("bleu4: hypothesis/reference count mismatch");

    long hyp_len = 0, ref_len = 0;
    std::array<long, 4> matched = {}, total = {};
    for (size_t k = 0; k < hypotheses.size(); ++k) {
        const auto& hyp = hypotheses[k];
        const auto& ref = references[k];
        hyp_len += static_cast<long>(hyp.size());
        ref_len += static_cast<long>(ref.size());
        for (int n = 1; n <= 4; ++n) {
            std::map<std::vector<std::string>, long> hyp_counts, ref_counts;
            for (size_t i = 0; i + n <= hyp.size(); ++i)
                hyp_counts[std::vector<std::string>(hyp.begin() + i, hyp.begin() + i + n)]++;
            for (size_t i = 0; i + n <= ref.size(); ++i)
                ref_counts[std::vector<std::string>(ref.begin() + i, ref.begin() + i + n)]++;
            for (const auto& [ngram, count] : hyp_counts) {
                total[n - 1] += count;
                auto it = ref_counts.find(ngram);
                if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
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
    double bp = hyp_len >= ref_len
                    ? 1.0
                    : std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
    return bp * std::exp(log_prec / orders);
}

struct EvalReport {
    std::optional<double> curr_ua;
    std::optional<double> resp_ua;
    double bleu = 0.0; // fraction in [0,1]
    double malformed_rate = 0.0;
    std::optional<ConfusionMatrix> curr_cm;
    std::optional<ConfusionMatrix> resp_cm;
    long n_examples = 0;
    uint64_t config_fingerprint = 0;
};

inline EvalReport evaluate(const std::vector<ParsedPrediction>& predictions,
                           const std::vector<GoldTriple>& golds, TaskOrdering ordering) {
    if (predictions.size() != golds.size())
        throw ValidationError("evaluate: prediction/gold count mismatch");
    if (predictions.empty()) throw ValidationError("evaluate: empty evaluation set");

    EvalReport report;
    report.n_examples = static_cast<long>(predictions.size());
    long malformed = 0;
    ConfusionMatrix curr_cm, resp_cm;
    std::vector<std::vector<std::string>> hyps, refs;
    for (size_t i = 0; i < predictions.size(); ++i) {
        const auto& pred = predictions[i];
        const auto& gold = golds[i];
        if (pred.malformed) ++malformed;
        if (ordering_predicts_current(ordering)) {
            if (!gold.current_label || !pred.current_label)
                throw ValidationError("evaluate: current label missing for this ordering");
            curr_cm.add(*gold.current_label, *pred.current_label);
        }
        if (ordering_predicts_response_label(ordering)) {
            if (!gold.response_label || !pred.response_label)
                throw ValidationError("evaluate: response label missing for this ordering");
            resp_cm.add(*gold.response_label, *pred.response_label);
        }
        hyps.push_back(pred.response_words);
        refs.push_back(gold.response_words);
    }
    if (ordering_predicts_current(ordering)) {
        report.curr_cm = curr_cm;
        report.curr_ua = unweighted_accuracy(curr_cm);
    }
    if (ordering_predicts_response_label(ordering)) {
        report.resp_cm = resp_cm;
        report.resp_ua = unweighted_accuracy(resp_cm);
    }
    report.bleu = bleu4(hyps, refs);
    report.malformed_rate = static_cast<double>(malformed) / predictions.size();
    return report;
}

inline void to_json(nlohmann::json& j, const ConfusionMatrix& cm) {
    j = nlohmann::json::array();
    for (const auto& row : cm.counts) j.push_back(row);
}

inline void from_json(const nlohmann::json& j, ConfusionMatrix& cm) {
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cm.counts[r][c] = j.at(r).at(c).get<long>();
}

inline void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json::object();
    if (r.curr_ua) j["curr_ua"] = *r.curr_ua;
    if (r.resp_ua) j["resp_ua"] = *r.resp_ua;
    j["bleu"] = r.bleu;
    j["bleu_x100"] = r.bleu * 100.0;
    j["malformed_rate"] = r.malformed_rate;
    if (r.curr_cm) j["curr_confusion"] = *r.curr_cm;
    if (r.resp_cm) j["resp_confusion"] = *r.resp_cm;
    j["n_examples"] = r.n_examples;
    j["config_fingerprint"] = r.config_fingerprint;
}

inline void from_json(const nlohmann::json& j, EvalReport& r) {
    if (j.contains("curr_ua")) r.curr_ua = j.at("curr_ua").get<double>();
    if (j.contains("resp_ua")) r.resp_ua = j.at("resp_ua").get<double>();
    j.at("bleu").get_to(r.bleu);
    j.at("malformed_rate").get_to(r.malformed_rate);
    if (j.contains("curr_confusion")) r.curr_cm = j.at("curr_confusion").get<ConfusionMatrix>();
    if (j.contains("resp_confusion")) r.resp_cm = j.at("resp_confusion").get<ConfusionMatrix>();
    j.at("n_examples").get_to(r.n_examples);
    j.at("config_fingerprint").get_to(r.config_fingerprint);
}

} // namespace sermux

#endif
