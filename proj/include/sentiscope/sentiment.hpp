#pragma once

// Rule-based polarity scoring (Vader rule family) and emotion frequency profiles.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sentiscope/error.hpp"
#include "sentiscope/lexicon.hpp"
#include "sentiscope/text.hpp"

namespace sentiscope {

struct SentimentScore {
    double negative = 0.0;
    double neutral = 1.0;
    double positive = 0.0;
    double compound = 0.0;
};

struct ModifierTables {
    std::unordered_set<std::string> negators;
    std::unordered_map<std::string, double> boosters;
    double caps_boost = 0.733;
    double exclamation_step = 0.292;
    int exclamation_cap = 3;
    double question_boost = 0.18;
    double negation_factor = -0.74;
    double norm_alpha = 15.0;
    std::size_t lookback = 3;

    /// Negator and booster inventories and constants of the Vader rules.
    static ModifierTables vader() {
        ModifierTables m;
        m.negators = {
            "aint",    "arent",  "cannot",  "cant",    "couldnt", "darent",   "despite", "didnt",  "doesnt",
            "dont",    "hadnt",  "hasnt",   "havent",  "isnt",    "mightnt",  "mustnt",  "neednt", "neither",
            "never",   "none",   "nope",    "nor",     "not",     "nothing",  "nowhere", "oughtnt", "rarely",
            "seldom",  "shant",  "shouldnt", "uh-uh",  "uhuh",    "wasnt",    "werent",  "without", "wont",
            "wouldnt",
        };
        constexpr double incr = 0.293;
        for (const char* w :
             {"absolutely", "amazingly",   "awfully",      "completely",  "considerable", "considerably",
              "decidedly",  "deeply",      "effing",       "enormous",    "enormously",   "entirely",
              "especially", "exceptional", "exceptionally", "extreme",    "extremely",    "fabulously",
              "flippin",    "flipping",    "frackin",      "fracking",    "frickin",      "fricking",
              "friggin",    "frigging",    "fuckin",       "fucking",     "fuggin",       "fugging",
              "fully",      "greatly",     "hella",        "highly",      "hugely",       "incredible",
              "incredibly", "intensely",   "major",        "majorly",     "more",         "most",
              "particularly", "purely",    "quite",        "really",      "remarkably",   "so",
              "substantially", "thoroughly", "total",      "totally",     "tremendous",   "tremendously",
              "uber",       "unbelievably", "unusually",   "utter",       "utterly",      "very"})
            m.boosters.emplace(w, incr);
        for (const char* w : {"almost", "barely", "hardly", "kinda", "kind-of", "kindof", "less", "little",
                              "marginal", "marginally", "occasional", "occasionally", "partly", "scarce",
                              "scarcely", "slight", "slightly", "somewhat", "sorta", "sort-of", "sortof"})
            m.boosters.emplace(w, -incr);
        return m;
    }

    void validate() const {
        if (!(negation_factor > -1.0 && negation_factor < 0.0)) throw Error("negation_factor must lie in (-1, 0)");
        if (!(norm_alpha > 0.0)) throw Error("norm_alpha must be positive");
        if (exclamation_cap < 0) throw Error("exclamation_cap must be nonnegative");
    }

    /// Listed negators and any "...n't" contraction (ASCII or typographic apostrophe).
    bool is_negator(std::string_view normalized) const {
        if (normalized.ends_with("n't") || normalized.ends_with("n’t")) return true;
        return negators.contains(std::string(normalized));
    }

    std::optional<double> booster(std::string_view normalized) const {
        auto it = boosters.find(std::string(normalized));
        if (it == boosters.end()) return std::nullopt;
        return it->second;
    }
};

namespace detail {

inline double sign(double v) { return (v > 0) - (v < 0); }

/// Adjusted valence per token; nullopt for tokens the lexicon does not know.
inline std::vector<std::optional<double>> token_valences(const CleanDoc& doc, const ValenceLexicon& lex,
                                                         const ModifierTables& mods) {
    std::vector<std::optional<double>> out(doc.tokens.size());
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
        const Token& tok = doc.tokens[i];
        auto base = lex.lookup(tok.normalized);
        if (!base) continue;
        double v = *base;
        const double s = sign(v);
        if (tok.all_caps) v += mods.caps_boost * s;
        bool negated = false;
        const std::size_t first = i >= mods.lookback ? i - mods.lookback : 0;
        for (std::size_t j = first; j < i; ++j) {
            const auto& prev = doc.tokens[j].normalized;
            if (auto inc = mods.booster(prev)) v += *inc * s;
            if (mods.is_negator(prev)) negated = true;
        }
        if (negated) v *= mods.negation_factor;
        out[i] = v;
    }
    return out;
}

}  // namespace detail

/// Adjusted valences of the lexicon-matched tokens, in token order.
inline std::vector<double> word_valences(const CleanDoc& doc, const ValenceLexicon& lex, const ModifierTables& mods) {
    std::vector<double> out;
    for (const auto& v : detail::token_valences(doc, lex, mods))
        if (v) out.push_back(*v);
    return out;
}

/// s / sqrt(s^2 + alpha): maps the real line onto (-1, 1).
inline double normalize_compound(double s, double alpha) {
    if (std::isinf(s)) return detail::sign(s);
    return s / std::sqrt(s * s + alpha);
}

inline double compound_score(std::span<const double> valences, const CleanDoc& doc, const ModifierTables& mods) {
    double s = 0.0;
    for (double v : valences) s += v;
    const double dir = detail::sign(s);
    s += mods.exclamation_step * std::min(doc.trailing_exclamations, mods.exclamation_cap) * dir;
    if (doc.trailing_double_question) s += mods.question_boost * dir;
    return normalize_compound(s, mods.norm_alpha);
}

/// Positive/neutral/negative shares plus compound. Matched tokens weigh
/// |valence| + 1 on their side; zero-valence and unmatched tokens weigh 1 as
/// neutral.
inline SentimentScore polarity_proportions(const CleanDoc& doc, const ValenceLexicon& lex, const ModifierTables& mods) {
    if (doc.empty()) return {};
    const auto per_token = detail::token_valences(doc, lex, mods);
    double pos = 0.0, neg = 0.0, neu = 0.0;
    std::vector<double> matched;
    for (const auto& v : per_token) {
        if (!v || *v == 0.0) {
            neu += 1.0;
        } else if (*v > 0) {
            pos += *v + 1.0;
        } else {
            neg += -*v + 1.0;
        }
        if (v) matched.push_back(*v);
    }
    const double z = pos + neg + neu;
    SentimentScore out;
    out.positive = pos / z;
    out.negative = neg / z;
    out.neutral = neu / z;
    out.compound = compound_score(matched, doc, mods);
    return out;
}

/// Raw (unadjusted) valence sum divided by the number of tokens.
inline double mean_word_score(const CleanDoc& doc, const ValenceLexicon& lex) {
    if (doc.empty()) throw Error("empty document");
    double sum = 0.0;
    for (const auto& tok : doc.tokens)
        if (auto v = lex.lookup(tok.normalized)) sum += *v;
    return sum / static_cast<double>(doc.size());
}

struct EmotionProfile {
    std::array<int, kEmotionCount> counts{};
    std::array<double, kEmotionCount> frequencies{};
    int word_total = 0;
    /// Set for empty documents: counts and frequencies are all zero.
    bool degenerate = false;

    int count(Emotion e) const { return counts[static_cast<std::size_t>(e)]; }
    double frequency(Emotion e) const { return frequencies[static_cast<std::size_t>(e)]; }
};

/// Per-emotion token counts over a stopword-free doc, divided by its token count.
inline EmotionProfile emotion_profile(const CleanDoc& doc, const EmotionLexicon& lex) {
    EmotionProfile p;
    p.word_total = static_cast<int>(doc.size());
    if (doc.empty()) {
        p.degenerate = true;
        return p;
    }
    for (const auto& tok : doc.tokens) {
        auto set = lex.lookup(tok.normalized);
        if (!set) continue;
        for (Emotion e : kEmotions)
            if (set->contains(e)) ++p.counts[static_cast<std::size_t>(e)];
    }
    for (std::size_t i = 0; i < kEmotionCount; ++i)
        p.frequencies[i] = static_cast<double>(p.counts[i]) / static_cast<double>(p.word_total);
    return p;
}

}  // namespace sentiscope
