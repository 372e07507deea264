#pragma once

// Corpus cleaning and scoring stages shared by the CLI and its tests.

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sentiscope/io.hpp"
#include "sentiscope/lexicon.hpp"
#include "sentiscope/sentiment.hpp"
#include "sentiscope/series.hpp"
#include "sentiscope/text.hpp"

namespace sentiscope {

/// Lexicons and word lists used by cleaning and scoring.
struct Resources {
    ValenceLexicon valence;
    EmotionLexicon emotions;
    WordSet stopwords;
    /// Vocabulary for the language rule: stopwords, both lexicons' words and an
    /// optional general English word list.
    WordSet english;
    ModifierTables modifiers = ModifierTables::vader();

    static Resources load(const std::filesystem::path& valence_path, const std::filesystem::path& emotion_path,
                          const std::filesystem::path& stopword_path,
                          const std::filesystem::path& english_path = {}) {
        Resources r;
        r.valence = load_valence_lexicon(valence_path);
        r.emotions = load_emotion_lexicon(emotion_path);
        r.stopwords = load_wordlist(stopword_path);
        r.english = r.stopwords;
        for (const auto& [w, _] : r.valence.entries())
            if (has_letter(w)) r.english.insert(w);
        for (const auto& [w, _] : r.emotions.entries()) r.english.insert(w);
        if (!english_path.empty()) {
            auto extra = load_wordlist(english_path);
            r.english.merge(extra);
        }
        return r;
    }

    TextPipeline text_pipeline() const { return TextPipeline(valence, stopwords, english); }
};

struct CleanReport {
    std::size_t input = 0;
    std::size_t malformed = 0;
    /// posts whose text lost URLs, hashtag symbols or mentions.
    std::size_t artifacts_stripped = 0;
    /// posts dropped as non-English.
    std::size_t non_english_removed = 0;
    /// stopword tokens removed.
    std::size_t stopwords_removed = 0;
    /// Posts with nothing left after cleaning.
    std::size_t empty_removed = 0;
    std::size_t output = 0;
};

inline void write_clean_report(std::ostream& os, const CleanReport& r) {
    os << "rule,count\n"
       << "input," << r.input << '\n'
       << "malformed," << r.malformed << '\n'
       << "artifacts_stripped," << r.artifacts_stripped << '\n'
       << "non_english_removed," << r.non_english_removed << '\n'
       << "stopwords_removed," << r.stopwords_removed << '\n'
       << "empty_removed," << r.empty_removed << '\n'
       << "output," << r.output << '\n';
}

/// Applies the cleaning rules; the returned records carry the cleaned text and
/// the stopword-free tokens.
inline std::vector<CorpusRecord> clean_corpus(std::span<const CorpusRecord> in, const TextPipeline& pipeline,
                                              CleanReport& report) {
    std::vector<CorpusRecord> out;
    for (const auto& rec : in) {
        ++report.input;
        if (strip_artifacts(rec.post.text) != detail::collapse_ws(rec.post.text)) ++report.artifacts_stripped;
        auto prepared = pipeline.prepare(rec.post);
        if (!prepared) {
            ++report.non_english_removed;
            continue;
        }
        if (prepared->scoring_doc.empty()) {
            ++report.empty_removed;
            continue;
        }
        report.stopwords_removed += prepared->scoring_doc.size() - prepared->content_doc.size();
        CorpusRecord c{prepared->post, std::vector<std::string>{}};
        for (const auto& t : prepared->content_doc.tokens) c.content_tokens->push_back(t.normalized);
        out.push_back(std::move(c));
    }
    report.output = out.size();
    return out;
}

/// Vader proportions and compound over the full token stream; emotion
/// frequencies over the stopword-free stream.
inline ScoredPost score_post(const PreparedPost& p, const Resources& res) {
    ScoredPost s;
    s.id = p.post.id;
    s.date = p.post.date;
    s.city = p.post.city;
    s.sentiment = polarity_proportions(p.scoring_doc, res.valence, res.modifiers);
    s.emotions = emotion_profile(p.content_doc, res.emotions).frequencies;
    s.like_count = p.post.like_count;
    s.reply_count = p.post.reply_count;
    s.retweet_count = p.post.retweet_count;
    s.text = p.post.text;
    return s;
}

/// Scores a cleaned corpus. Records are re-prepared (cleaning is idempotent),
/// so raw records may be passed too; dropped ones are skipped.
inline std::vector<ScoredPost> score_corpus(std::span<const CorpusRecord> in, const Resources& res) {
    const auto pipeline = res.text_pipeline();
    std::vector<ScoredPost> out;
    for (const auto& rec : in) {
        auto prepared = pipeline.prepare(rec.post);
        if (!prepared || prepared->scoring_doc.empty()) continue;
        out.push_back(score_post(*prepared, res));
    }
    return out;
}

inline void write_period_summary_csv(std::ostream& os, std::span<const PeriodSummary> rows) {
    os << "city,period,n_tweets,mean,sd\n";
    for (const auto& r : rows)
        csv::write_row(os, std::array<std::string, 5>{r.city, r.period, std::to_string(r.n_tweets),
                                                      r.n_tweets ? csv::number(r.mean) : "",
                                                      r.sd ? csv::number(*r.sd) : ""});
}

}  // namespace sentiscope
