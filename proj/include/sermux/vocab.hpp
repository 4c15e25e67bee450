#ifndef SERMUX_VOCAB_HPP
#define SERMUX_VOCAB_HPP

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sermux/common.hpp"
#include "sermux/corpus.hpp"
#include "sermux/sentiment.hpp"

namespace sermux {

using TokenId = int;

// Reserved ids, fixed across every vocabulary.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kUnkId = 1;
inline constexpr TokenId kEotId = 2; // end of turn (prompt delimiter)
inline constexpr TokenId kEosId = 3; // end of serialized target
inline constexpr TokenId kPositiveId = 4;
inline constexpr TokenId kNeutralId = 5;
inline constexpr TokenId kNegativeId = 6;
inline constexpr TokenId kSpeechId = 7; // names the embedding slot; never a target
inline constexpr int kNumReserved = 8;

inline TokenId marker_id(SentimentLabel l) { return kPositiveId + code(l); }

inline bool is_marker_id(TokenId id) { return id >= kPositiveId && id <= kNegativeId; }

inline SentimentLabel label_of_marker(TokenId id) {
    if (!is_marker_id(id)) throw ValidationError("token id is not a sentiment marker");
    return sentiment_from_code(id - kPositiveId);
}

class Vocabulary {
  public:
    Vocabulary() {
        static const char* reserved[] = {"<pad>", "<unk>", "<eot>", "<eos>",
                                         "<positive>", "<neutral>", "<negative>", "<speech>"};
        for (const char* t : reserved) tokens_.emplace_back(t);
    }

    // Plain words are appended after the reserved block; markers stay untouched.
    void add_word(const std::string& w) {
        if (word_to_id_.count(w)) return;
        word_to_id_[w] = static_cast<TokenId>(tokens_.size());
        tokens_.push_back(w);
    }

    int size() const { return static_cast<int>(tokens_.size()); }

    /// Word lookup only; literal "<positive>" in text is an ordinary
    /// (usually unknown) word, never the marker id.
    TokenId word_id(const std::string& w) const {
        auto it = word_to_id_.find(w);
        return it == word_to_id_.end() ? kUnkId : it->second;
    }

    const std::string& token(TokenId id) const {
        if (id < 0 || id >= size())
            throw ValidationError("token id out of range: " + std::to_string(id));
        return tokens_[id];
    }

    std::vector<TokenId> encode(const std::vector<std::string>& words) const {
        std::vector<TokenId> ids;
        ids.reserve(words.size());
        for (const auto& w : words) ids.push_back(word_id(w));
        return ids;
    }

    std::vector<TokenId> encode(const std::string& text) const {
        return encode(split_words(text));
    }

    std::string decode(const std::vector<TokenId>& ids) const {
        std::string out;
        for (size_t i = 0; i < ids.size(); ++i) {
            if (i) out += ' ';
            out += token(ids[i]);
        }
        return out;
    }

    void save(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw IoError("cannot write vocabulary file: " + path);
        os << nlohmann::json(tokens_).dump(2) << '\n';
    }

    static Vocabulary load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw IoError("cannot read vocabulary file: " + path);
        nlohmann::json j;
        try {
            is >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("vocab.json: ") + e.what());
        }
        auto tokens = j.get<std::vector<std::string>>();
        Vocabulary v;
        if (tokens.size() < kNumReserved ||
            !std::equal(v.tokens_.begin(), v.tokens_.end(), tokens.begin()))
            throw FormatError("vocab.json: reserved token block is damaged");
        for (size_t i = kNumReserved; i < tokens.size(); ++i) v.add_word(tokens[i]);
        return v;
    }

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> word_to_id_;
};

inline Vocabulary build_vocabulary(const Corpus& corpus, int min_count = 1) {
    std::map<std::string, long> counts;
    for (const auto& dlg : corpus.dialogues)
        for (const auto& turn : dlg.turns)
            for (const auto& w : turn.words) counts[w]++;
    std::vector<std::pair<std::string, long>> ranked(counts.begin(), counts.end());
    // descending count, ties lexicographic
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [word, count] : ranked)
        if (count >= min_count) v.add_word(word);
    return v;
}

} // namespace sermux

#endif
