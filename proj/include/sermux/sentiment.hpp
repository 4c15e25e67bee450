#ifndef SERMUX_SENTIMENT_HPP
#define SERMUX_SENTIMENT_HPP

#include <array>
#include <optional>
#include <string>

#include "sermux/common.hpp"

namespace sermux {

// Integer codes are fixed project-wide: positive=0, neutral=1, negative=2.
enum class SentimentLabel : int {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
};

inline constexpr int kNumSentimentClasses = 3;

inline constexpr std::array<SentimentLabel, 3> kAllSentiments = {
    SentimentLabel::Positive, SentimentLabel::Neutral, SentimentLabel::Negative};

inline const char* sentiment_name(SentimentLabel l) {
    switch (l) {
        case SentimentLabel::Positive: return "positive";
        case SentimentLabel::Neutral: return "neutral";
        case SentimentLabel::Negative: return "negative";
    }
    return "?";
}

inline std::optional<SentimentLabel> sentiment_from_name(const std::string& s) {
    if (s == "positive") return SentimentLabel::Positive;
    if (s == "neutral") return SentimentLabel::Neutral;
    if (s == "negative") return SentimentLabel::Negative;
    return std::nullopt;
}

inline SentimentLabel sentiment_from_code(int code) {
    if (code < 0 || code >= kNumSentimentClasses)
        throw ValidationError("sentiment code out of range: " + std::to_string(code));
    return static_cast<SentimentLabel>(code);
}

inline int code(SentimentLabel l) { return static_cast<int>(l); }

} // namespace sermux

#endif
