#ifndef SERMUX_CORPUS_HPP
#define SERMUX_CORPUS_HPP

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sermux/common.hpp"
#include "sermux/features.hpp"
#include "sermux/sentiment.hpp"

namespace sermux {

enum class Split : int { Train = 0, Dev = 1, Test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

inline Split split_from_name(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    throw FormatError("unknown split name: " + s);
}

struct Turn {
    char speaker = 'A'; // 'A' or 'B'
    std::vector<std::string> words;
    SentimentLabel label = SentimentLabel::Neutral;
    std::string features_ref;
    int frame_count = 0;

    std::string text() const {
        std::string s;
        for (size_t i = 0; i < words.size(); ++i) {
            if (i) s += ' ';
            s += words[i];
        }
        return s;
    }
};

struct Dialogue {
    std::string id;
    Split split = Split::Train;
    std::vector<Turn> turns;
};

struct Corpus {
    std::vector<Dialogue> dialogues;
    // features_ref -> frame matrix, shared across splits
    std::map<std::string, FrameMatrix> features;

    const FrameMatrix& frames(const std::string& ref) const {
        auto it = features.find(ref);
        if (it == features.end()) throw IoError("unresolvable features_ref: " + ref);
        return it->second;
    }
};

inline std::array<std::vector<std::string>, 3> default_template_bank() {
    return {{
        {"that sounds really great", "i love this so much", "what a wonderful idea",
         "this is fantastic news", "i am so happy about it", "great job that was excellent"},
        {"i see what you mean", "the meeting is at noon", "it is on the table",
         "they arrived earlier today", "we can talk about it later", "that is what happened"},
        {"that is really awful", "i hate this so much", "what a terrible idea",
         "this is bad news", "i am so upset about it", "poor job that was a mess"},
    }};
}

struct GeneratorSpec {
    int n_dialogues = 200;
    int min_turns = 4;
    int max_turns = 8;
    std::array<double, 3> class_prior = {0.30, 0.53, 0.17}; // positive, neutral, negative
    std::array<std::array<double, 3>, 3> markov_transition = {{{0.6, 0.2, 0.2},
                                                               {0.2, 0.6, 0.2},
                                                               {0.2, 0.2, 0.6}}};
    double sarcasm_rate = 0.0;
    int feature_dim = 8;
    double feature_cluster_separation = 6.0;
    int min_frames = 5;
    int max_frames = 20;
    // per label, space-separated words
    std::array<std::vector<std::string>, 3> template_bank = default_template_bank();
    double train_fraction = 0.7;
    double dev_fraction = 0.15;
    uint64_t seed = 1;

    void validate() const {
        if (n_dialogues < 1) throw ValidationError("GeneratorSpec: n_dialogues must be >= 1");
        if (min_turns < 2 || max_turns < min_turns)
            throw ValidationError("GeneratorSpec: turn range must satisfy 2 <= min <= max");
        double prior_sum = class_prior[0] + class_prior[1] + class_prior[2];
        if (std::abs(prior_sum - 1.0) > 1e-9)
            throw ValidationError("GeneratorSpec: class_prior must sum to 1");
        for (int i = 0; i < 3; ++i) {
            double row = 0.0;
            for (int j = 0; j < 3; ++j) {
                if (markov_transition[i][j] < 0.0)
                    throw ValidationError("GeneratorSpec: markov_transition has a negative entry");
                row += markov_transition[i][j];
            }
            if (std::abs(row - 1.0) > 1e-9)
                throw ValidationError("GeneratorSpec: markov_transition row " +
                                      std::to_string(i) + " must sum to 1");
        }
        if (sarcasm_rate < 0.0 || sarcasm_rate > 1.0)
            throw ValidationError("GeneratorSpec: sarcasm_rate must be in [0,1]");
        if (feature_dim < 3)
            throw ValidationError("GeneratorSpec: feature_dim must be >= 3");
        if (feature_cluster_separation < 0.0)
            throw ValidationError("GeneratorSpec: feature_cluster_separation must be >= 0");
        if (min_frames < 1 || max_frames < min_frames)
            throw ValidationError("GeneratorSpec: frame range must satisfy 1 <= min <= max");
        for (const auto& bank : template_bank)
            if (bank.empty()) throw ValidationError("GeneratorSpec: empty template bank");
        if (train_fraction <= 0.0 || dev_fraction < 0.0 ||
            train_fraction + dev_fraction >= 1.0)
            throw ValidationError("GeneratorSpec: split fractions must leave room for a test split");
    }
};

inline std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream iss(text);
    std::string w;
    while (iss >> w) words.push_back(w);
    return words;
}

namespace detail {

inline int sample_categorical(Rng& rng, const double* probs, int n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return n - 1;
}

// Per-label feature centroid: sigma_sep along axis `label`.
inline double centroid_component(int label, int dim_index, double sigma_sep) {
    return dim_index == label ? sigma_sep : 0.0;
}

} // namespace detail

inline Corpus generate_synthetic_corpus(const GeneratorSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Corpus corpus;
    corpus.dialogues.reserve(spec.n_dialogues);
    for (int d = 0; d < spec.n_dialogues; ++d) {
        Dialogue dlg;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "dlg%05d", d);
        dlg.id = idbuf;
        double u = unit(rng);
        dlg.split = u < spec.train_fraction           ? Split::Train
                    : u < spec.train_fraction + spec.dev_fraction ? Split::Dev
                                                                  : Split::Test;
        std::uniform_int_distribution<int> turn_count_dist(spec.min_turns, spec.max_turns);
        int n_turns = turn_count_dist(rng);
        int true_label = detail::sample_categorical(rng, spec.class_prior.data(), 3);
        for (int t = 0; t < n_turns; ++t) {
            if (t > 0)
                true_label =
                    detail::sample_categorical(rng, spec.markov_transition[true_label].data(), 3);
            int surface_label = true_label;
            if (unit(rng) < spec.sarcasm_rate) {
                // sarcasm: text drawn from one of the two other labels
                int offset = 1 + (unit(rng) < 0.5 ? 0 : 1);
                surface_label = (true_label + offset) % 3;
            }
            std::uniform_int_distribution<size_t> tmpl_dist(
                0, spec.template_bank[surface_label].size() - 1);
            Turn turn;
            turn.speaker = (t % 2 == 0) ? 'A' : 'B';
            turn.words = split_words(spec.template_bank[surface_label][tmpl_dist(rng)]);
            turn.label = sentiment_from_code(true_label);
            turn.features_ref = dlg.id + "_t" + std::to_string(t);
            std::uniform_int_distribution<int> frame_dist(spec.min_frames, spec.max_frames);
            turn.frame_count = frame_dist(rng);
            FrameMatrix frames(turn.frame_count, spec.feature_dim);
            std::normal_distribution<double> noise(0.0, 1.0);
            // stored at f32 precision so the on-disk format round-trips exactly
            for (int r = 0; r < frames.rows; ++r)
                for (int c = 0; c < frames.cols; ++c)
                    frames.at(r, c) = static_cast<double>(static_cast<float>(
                        detail::centroid_component(true_label, c,
                                                   spec.feature_cluster_separation) +
                        noise(rng)));
            corpus.features.emplace(turn.features_ref, std::move(frames));
            dlg.turns.push_back(std::move(turn));
        }
        corpus.dialogues.push_back(std::move(dlg));
    }
    return corpus;
}

inline std::array<long, 3> class_distribution(const Corpus& corpus, Split split) {
    std::array<long, 3> counts = {0, 0, 0};
    for (const auto& dlg : corpus.dialogues) {
        if (dlg.split != split) continue;
        for (const auto& turn : dlg.turns) counts[code(turn.label)]++;
    }
    return counts;
}

inline void save_corpus(const Corpus& corpus, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(directory) / "features");
    std::ofstream os(fs::path(directory) / "corpus.jsonl");
    if (!os) throw IoError("cannot open corpus.jsonl for writing in " + directory);
    for (const auto& dlg : corpus.dialogues) {
        nlohmann::json j;
        j["id"] = dlg.id;
        j["split"] = split_name(dlg.split);
        auto& turns = j["turns"] = nlohmann::json::array();
        for (const auto& turn : dlg.turns) {
            turns.push_back({{"speaker", std::string(1, turn.speaker)},
                             {"text", turn.text()},
                             {"label", sentiment_name(turn.label)},
                             {"features_ref", turn.features_ref},
                             {"frame_count", turn.frame_count}});
        }
        os << j.dump() << '\n';
    }
    for (const auto& [ref, frames] : corpus.features)
        save_frame_features(frames, (fs::path(directory) / "features" / (ref + ".plff")).string());
}

inline Corpus load_corpus(const std::string& directory) {
    namespace fs = std::filesystem;
    std::ifstream is(fs::path(directory) / "corpus.jsonl");
    if (!is) throw IoError("cannot open corpus.jsonl in " + directory);
    Corpus corpus;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("corpus.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
        Dialogue dlg;
        try {
            dlg.id = j.at("id").get<std::string>();
            dlg.split = split_from_name(j.at("split").get<std::string>());
            for (const auto& tj : j.at("turns")) {
                Turn turn;
                std::string speaker = tj.at("speaker").get<std::string>();
                if (speaker != "A" && speaker != "B")
                    throw FormatError("speaker must be A or B, got " + speaker);
                turn.speaker = speaker[0];
                turn.words = split_words(tj.at("text").get<std::string>());
                if (turn.words.empty()) throw FormatError("empty turn text");
                auto label = sentiment_from_name(tj.at("label").get<std::string>());
                if (!label) throw FormatError("unknown label " + tj.at("label").dump());
                turn.label = *label;
                turn.features_ref = tj.at("features_ref").get<std::string>();
                turn.frame_count = tj.at("frame_count").get<int>();
                dlg.turns.push_back(std::move(turn));
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("corpus.jsonl line " + std::to_string(lineno) +
                              " (dialogue record): " + e.what());
        }
        if (dlg.turns.size() < 2)
            throw FormatError("corpus.jsonl line " + std::to_string(lineno) +
                              ": dialogue needs at least 2 turns");
        corpus.dialogues.push_back(std::move(dlg));
    }
    for (const auto& dlg : corpus.dialogues) {
        for (const auto& turn : dlg.turns) {
            auto path = fs::path(directory) / "features" / (turn.features_ref + ".plff");
            FrameMatrix m = load_frame_features(path.string());
            if (m.rows != turn.frame_count)
                throw FormatError("frame_count mismatch for " + turn.features_ref);
            corpus.features.emplace(turn.features_ref, std::move(m));
        }
    }
    return corpus;
}

} // namespace sermux

#endif
