#pragma once

// Post cleaning and tokenization.
//
// Fixed order: strip_artifacts -> is_english -> tokenize -> remove_stopwords.
// Punctuation emphasis ("Good!!!", "??") is recorded by the tokenizer, so it
// must see the text before any punctuation is dropped.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sentiscope/date.hpp"
#include "sentiscope/error.hpp"
#include "sentiscope/lexicon.hpp"

namespace sentiscope {

struct RawPost {
    std::string id;
    Date date;
    std::string city;
    std::string text;
    std::int64_t like_count = 0;
    std::int64_t reply_count = 0;
    std::int64_t retweet_count = 0;
    std::optional<std::string> lang;

    void validate() const {
        if (city.empty()) throw Error("post '" + id + "': empty city");
        if (like_count < 0 || reply_count < 0 || retweet_count < 0)
            throw Error("post '" + id + "': negative engagement count");
    }

    friend bool operator==(const RawPost&, const RawPost&) = default;
};

struct Token {
    std::string surface;
    std::string normalized;
    bool all_caps = false;
    bool is_emoticon = false;
    bool is_stopword = false;

    friend bool operator==(const Token&, const Token&) = default;
};

struct CleanDoc {
    std::vector<Token> tokens;
    int trailing_exclamations = 0;
    bool trailing_double_question = false;
    std::string source_id;

    bool empty() const { return tokens.empty(); }
    std::size_t size() const { return tokens.size(); }

    friend bool operator==(const CleanDoc&, const CleanDoc&) = default;
};

using WordSet = std::unordered_set<std::string>;

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline bool is_ascii_punct(char c) {
    auto u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

inline bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u);
}

inline std::vector<std::string_view> split_ws(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.push_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string collapse_ws(std::string_view text) {
    std::string out;
    for (auto w : split_ws(text)) {
        if (!out.empty()) out += ' ';
        out += w;
    }
    return out;
}

inline std::string_view strip_punct(std::string_view w) {
    while (!w.empty() && is_ascii_punct(w.front())) w.remove_prefix(1);
    while (!w.empty() && is_ascii_punct(w.back())) w.remove_suffix(1);
    return w;
}

inline bool all_caps(std::string_view s) {
    int letters = 0;
    for (char c : s) {
        if (c >= 'a' && c <= 'z') return false;
        if (c >= 'A' && c <= 'Z') ++letters;
    }
    return letters >= 2;
}

}  // namespace detail

/// Removes URLs (scheme-prefixed, www., t.co/...), "#" symbols (keeping the
/// tagged word) and "@" mentions (symbol and handle), then collapses whitespace.
inline std::string strip_artifacts(std::string_view text) {
    static const std::regex url(R"((https?://|www\.)\S*|\bt\.co/\S*)", std::regex::icase);
    static const std::regex mention(R"(@[A-Za-z0-9_]*)");
    std::string s(text);
    s.erase(std::remove(s.begin(), s.end(), '#'), s.end());
    s = std::regex_replace(s, url, " ");
    s = std::regex_replace(s, mention, " ");
    return detail::collapse_ws(s);
}

/// Language filter. An explicit tag decides; untagged posts count as English
/// when at least `min_ratio` of their alphabetic words are in `english_words`.
/// Posts with no alphabetic words are kept.
inline bool is_english(const RawPost& post, const WordSet& english_words, double min_ratio = 0.4) {
    if (post.lang) return fold_case(*post.lang) == "en";
    std::size_t alpha = 0, known = 0;
    for (auto chunk : detail::split_ws(post.text)) {
        auto w = detail::strip_punct(chunk);
        if (!has_letter(w)) continue;
        ++alpha;
        if (english_words.contains(fold_case(w))) ++known;
    }
    if (alpha == 0) return true;
    return static_cast<double>(known) >= min_ratio * static_cast<double>(alpha);
}

inline bool is_english(const RawPost& post, const ValenceLexicon& lexicon, double min_ratio = 0.4) {
    WordSet words;
    for (const auto& [token, _] : lexicon.entries()) words.insert(token);
    return is_english(post, words, min_ratio);
}

/// One word per line; blank lines and lines starting with '#' are ignored.
inline WordSet load_wordlist(const std::filesystem::path& path) {
    WordSet out;
    detail::for_each_line(detail::read_file(path), [&](std::size_t, std::string_view line) {
        auto w = detail::trim(line);
        if (!w.empty() && w.front() != '#') out.insert(fold_case(w));
    });
    return out;
}

class Tokenizer {
public:
    Tokenizer() = default;

    /// Emoticons are the letter-free tokens of `lexicon`, so the tokenizer
    /// recognises exactly the symbols the scorer can look up.
    explicit Tokenizer(const ValenceLexicon& lexicon, WordSet stopwords = {})
        : stopwords_(std::move(stopwords)) {
        for (auto& t : lexicon.symbol_tokens()) emoticons_.insert(std::move(t));
    }

    Tokenizer(std::set<std::string, std::less<>> emoticons, WordSet stopwords)
        : emoticons_(std::move(emoticons)), stopwords_(std::move(stopwords)) {}

    CleanDoc operator()(std::string_view text, std::string source_id = {}) const {
        CleanDoc doc;
        doc.source_id = std::move(source_id);
        for (auto chunk : detail::split_ws(text)) {
            if (emoticons_.contains(chunk)) {
                doc.tokens.push_back({std::string(chunk), std::string(chunk), false, true, false});
                continue;
            }
            record_emphasis(chunk, doc);
            auto word = detail::strip_punct(chunk);
            if (word.empty() || std::none_of(word.begin(), word.end(), detail::is_word_char)) continue;
            Token tok;
            tok.surface = std::string(word);
            tok.normalized = fold_case(word);
            tok.all_caps = detail::all_caps(word);
            tok.is_stopword = stopwords_.contains(tok.normalized);
            doc.tokens.push_back(std::move(tok));
        }
        return doc;
    }

    const std::set<std::string, std::less<>>& emoticons() const { return emoticons_; }
    const WordSet& stopwords() const { return stopwords_; }

private:
    // Sentence-final punctuation runs: "!" characters accumulate, a run of two
    // or more "?" flags the doc. A lone "?" carries no emphasis.
    static void record_emphasis(std::string_view chunk, CleanDoc& doc) {
        std::size_t end = chunk.size();
        std::size_t start = end;
        while (start > 0 && detail::is_ascii_punct(chunk[start - 1])) --start;
        int questions = 0;
        for (std::size_t i = start; i < end; ++i) {
            if (chunk[i] == '!') {
                ++doc.trailing_exclamations;
                questions = 0;
            } else if (chunk[i] == '?') {
                if (++questions >= 2) doc.trailing_double_question = true;
            } else {
                questions = 0;
            }
        }
    }

    std::set<std::string, std::less<>> emoticons_;
    WordSet stopwords_;
};

/// Tokenizer without emoticon or stopword knowledge.
inline CleanDoc tokenize(std::string_view text) { return Tokenizer{}(text); }

inline CleanDoc remove_stopwords(CleanDoc doc, const WordSet& stoplist) {
    std::erase_if(doc.tokens, [&](const Token& t) { return stoplist.contains(t.normalized); });
    return doc;
}

/// A post after the cleaning rules, with its two token streams: the full one
/// used for sentiment scoring (negators survive) and the stopword-free one used
/// for emotion counting and keyword work.
struct PreparedPost {
    RawPost post;
    CleanDoc scoring_doc;
    CleanDoc content_doc;
};

class TextPipeline {
public:
    TextPipeline(const ValenceLexicon& lexicon, WordSet stopwords, WordSet english_words)
        : tokenizer_(lexicon, stopwords), stopwords_(std::move(stopwords)), english_(std::move(english_words)) {}

    /// nullopt when the post is dropped by the language rule.
    std::optional<PreparedPost> prepare(RawPost post) const {
        post.text = strip_artifacts(post.text);
        if (!is_english(post, english_)) return std::nullopt;
        PreparedPost out;
        out.scoring_doc = tokenizer_(post.text, post.id);
        out.content_doc = remove_stopwords(out.scoring_doc, stopwords_);
        out.post = std::move(post);
        return out;
    }

    const Tokenizer& tokenizer() const { return tokenizer_; }
    const WordSet& stopwords() const { return stopwords_; }
    const WordSet& english_words() const { return english_; }

private:
    Tokenizer tokenizer_;
    WordSet stopwords_;
    WordSet english_;
};

}  // namespace sentiscope
