#pragma once

// Valence and emotion lexicons: immutable token lookup stores.
//
// Valence files are tab-separated "token<TAB>mean valence[<TAB>...]" lines
// (the public Vader layout; extra columns are ignored). Emotion files are
// "word<TAB>emotion<TAB>flag" triples (the NRC word-level layout).

#include <algorithm>
#include <array>
#include <bitset>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentiscope/error.hpp"

namespace sentiscope {

enum class Emotion : std::uint8_t {
    anticipation,
    positive,
    negative,
    sadness,
    disgust,
    joy,
    anger,
    surprise,
    fear,
    trust,
};

inline constexpr std::size_t kEmotionCount = 10;

/// Column order used in every report.
inline constexpr std::array<Emotion, kEmotionCount> kEmotions = {
    Emotion::anticipation, Emotion::positive, Emotion::negative, Emotion::sadness, Emotion::disgust,
    Emotion::joy,          Emotion::anger,    Emotion::surprise, Emotion::fear,    Emotion::trust,
};

inline constexpr std::string_view to_string(Emotion e) {
    constexpr std::array<std::string_view, kEmotionCount> names = {
        "anticipation", "positive", "negative", "sadness", "disgust",
        "joy",          "anger",    "surprise", "fear",    "trust",
    };
    return names[static_cast<std::size_t>(e)];
}

inline std::optional<Emotion> parse_emotion(std::string_view name) {
    for (Emotion e : kEmotions)
        if (to_string(e) == name) return e;
    return std::nullopt;
}

class EmotionSet {
public:
    EmotionSet() = default;
    EmotionSet(std::initializer_list<Emotion> list) {
        for (Emotion e : list) insert(e);
    }

    void insert(Emotion e) { bits_.set(static_cast<std::size_t>(e)); }
    bool contains(Emotion e) const { return bits_.test(static_cast<std::size_t>(e)); }
    bool empty() const { return bits_.none(); }
    std::size_t size() const { return bits_.count(); }

    friend bool operator==(const EmotionSet&, const EmotionSet&) = default;

private:
    std::bitset<kEmotionCount> bits_;
};

inline bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

inline bool has_letter(std::string_view s) { return std::any_of(s.begin(), s.end(), is_ascii_letter); }

/// Lowercases ASCII letters. Tokens without letters (emoticons such as ":-)"
/// or "</3") are returned verbatim.
inline std::string fold_case(std::string_view token) {
    std::string out(token);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

struct Provenance {
    std::string path;
    std::size_t checksum = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && ws(s.front())) s.remove_prefix(1);
    while (!s.empty() && ws(s.back())) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::size_t checksum(std::string_view bytes) { return std::hash<std::string_view>{}(bytes); }

/// Calls fn(line_number, line) for every line with trailing CR removed.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t lineno = 0, start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        fn(++lineno, line);
        start = end + 1;
    }
}

}  // namespace detail

class ValenceLexicon {
public:
    using Map = std::map<std::string, double, std::less<>>;

    ValenceLexicon() = default;

    /// Parses valence records from memory. `source` names the input in error messages.
    static ValenceLexicon parse(std::string_view text, std::string source) {
        ValenceLexicon lex;
        lex.provenance_ = {std::move(source), detail::checksum(text)};
        detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
            if (detail::trim(line).empty()) return;
            auto fields = detail::split_tabs(line);
            if (fields.size() < 2) throw ParseError(lex.provenance_.path, lineno, "expected token<TAB>valence");
            auto token = detail::trim(fields[0]);
            if (token.empty()) throw ParseError(lex.provenance_.path, lineno, "empty token");
            auto field = detail::trim(fields[1]);
            double valence = 0;
            auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), valence);
            if (ec != std::errc{} || p != field.data() + field.size())
                throw ParseError(lex.provenance_.path, lineno, "non-numeric valence '" + std::string(field) + "'");
            if (!std::isfinite(valence) || valence < -4.0 || valence > 4.0)
                throw ParseError(lex.provenance_.path, lineno, "valence " + std::string(field) + " outside [-4, 4]");
            auto [it, inserted] = lex.entries_.insert_or_assign(fold_case(token), valence);
            if (!inserted) ++lex.duplicates_;
        });
        if (lex.duplicates_ > 0)
            warn(lex.provenance_.path + ": " + std::to_string(lex.duplicates_) +
                 " duplicate token row(s); last occurrence kept");
        return lex;
    }

    std::optional<double> lookup(std::string_view token) const {
        auto it = entries_.find(fold_case(token));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    bool contains(std::string_view token) const { return lookup(token).has_value(); }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t duplicate_count() const { return duplicates_; }
    const Provenance& provenance() const { return provenance_; }
    const Map& entries() const { return entries_; }

    /// Tokens containing no letters: the emoticon and numeric-slang inventory.
    std::vector<std::string> symbol_tokens() const {
        std::vector<std::string> out;
        for (const auto& [token, _] : entries_)
            if (!has_letter(token)) out.push_back(token);
        return out;
    }

    friend bool operator==(const ValenceLexicon& a, const ValenceLexicon& b) { return a.entries_ == b.entries_; }

private:
    Map entries_;
    Provenance provenance_;
    std::size_t duplicates_ = 0;
};

class EmotionLexicon {
public:
    using Map = std::map<std::string, EmotionSet, std::less<>>;

    EmotionLexicon() = default;

    static EmotionLexicon parse(std::string_view text, std::string source) {
        EmotionLexicon lex;
        lex.provenance_ = {std::move(source), detail::checksum(text)};
        detail::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
            if (detail::trim(line).empty()) return;
            auto fields = detail::split_tabs(line);
            if (fields.size() != 3) throw ParseError(lex.provenance_.path, lineno, "expected word<TAB>emotion<TAB>flag");
            auto token = detail::trim(fields[0]);
            if (token.empty()) throw ParseError(lex.provenance_.path, lineno, "empty token");
            auto emotion = parse_emotion(detail::trim(fields[1]));
            if (!emotion)
                throw ParseError(lex.provenance_.path, lineno, "unknown emotion '" + std::string(fields[1]) + "'");
            auto flag = detail::trim(fields[2]);
            if (flag != "0" && flag != "1")
                throw ParseError(lex.provenance_.path, lineno, "flag must be 0 or 1, got '" + std::string(flag) + "'");
            if (flag == "1") lex.entries_[fold_case(token)].insert(*emotion);
        });
        return lex;
    }

    /// Emotions annotated for `token`; absent when the token carries none.
    std::optional<EmotionSet> lookup(std::string_view token) const {
        auto it = entries_.find(fold_case(token));
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const { return entries_.size(); }
    const Provenance& provenance() const { return provenance_; }
    const Map& entries() const { return entries_; }

    friend bool operator==(const EmotionLexicon& a, const EmotionLexicon& b) { return a.entries_ == b.entries_; }

private:
    Map entries_;
    Provenance provenance_;
};

inline ValenceLexicon load_valence_lexicon(const std::filesystem::path& path) {
    return ValenceLexicon::parse(detail::read_file(path), path.string());
}

inline EmotionLexicon load_emotion_lexicon(const std::filesystem::path& path) {
    return EmotionLexicon::parse(detail::read_file(path), path.string());
}

inline std::optional<double> lookup_valence(const ValenceLexicon& lex, std::string_view token) {
    return lex.lookup(token);
}

}  // namespace sentiscope
