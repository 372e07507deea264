#pragma once

// Corpus (JSON lines) and scored-post (CSV) formats.

#include <json.hpp>

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sentiscope/csv.hpp"
#include "sentiscope/date.hpp"
#include "sentiscope/error.hpp"
#include "sentiscope/lexicon.hpp"
#include "sentiscope/series.hpp"
#include "sentiscope/text.hpp"

namespace sentiscope {

struct CorpusRecord {
    RawPost post;
    /// Stopword-free tokens, present in cleaned corpora.
    std::optional<std::vector<std::string>> content_tokens;
};

struct CorpusReadResult {
    std::vector<CorpusRecord> records;
    std::size_t lines = 0;
    std::size_t malformed = 0;

    double malformed_fraction() const { return lines ? static_cast<double>(malformed) / static_cast<double>(lines) : 0.0; }
};

namespace detail {

inline std::int64_t count_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return 0;
    if (!j[key].is_number_integer()) throw Error(std::string(key) + " must be an integer");
    return j[key].get<std::int64_t>();
}

inline RawPost post_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error("record is not an object");
    RawPost p;
    const auto& id = j.at("id");
    p.id = id.is_string() ? id.get<std::string>() : id.dump();
    p.date = Date::parse(j.at("date").get<std::string>());
    p.city = j.at("city").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.like_count = count_field(j, "like_count");
    p.reply_count = count_field(j, "reply_count");
    p.retweet_count = count_field(j, "retweet_count");
    if (j.contains("lang") && !j["lang"].is_null()) p.lang = j["lang"].get<std::string>();
    p.validate();
    return p;
}

}  // namespace detail

/// One JSON object per line with id, date (YYYY-MM-DD), city, text and optional
/// lang, like_count, reply_count, retweet_count, content_tokens. Blank lines are
/// ignored; malformed lines are skipped, counted and reported via warn().
inline CorpusReadResult read_corpus_jsonl(std::istream& in, const std::string& source) {
    CorpusReadResult out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        ++out.lines;
        try {
            const auto j = nlohmann::json::parse(line);
            CorpusRecord rec{detail::post_from_json(j), std::nullopt};
            if (j.contains("content_tokens")) rec.content_tokens = j["content_tokens"].get<std::vector<std::string>>();
            out.records.push_back(std::move(rec));
        } catch (const std::exception& e) {
            ++out.malformed;
            warn(source + ":" + std::to_string(lineno) + ": skipped malformed record: " + e.what());
        }
    }
    return out;
}

inline void write_corpus_record(std::ostream& os, const CorpusRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.post.id;
    j["date"] = r.post.date.iso();
    j["city"] = r.post.city;
    if (r.post.lang) j["lang"] = *r.post.lang;
    j["like_count"] = r.post.like_count;
    j["reply_count"] = r.post.reply_count;
    j["retweet_count"] = r.post.retweet_count;
    j["text"] = r.post.text;
    if (r.content_tokens) j["content_tokens"] = *r.content_tokens;
    os << j.dump() << '\n';
}

// Scored CSV: id,date,city,negative,neutral,positive,compound,<ten emotion
// frequencies>,like_count,reply_count,retweet_count,text. Emotion columns carry
// an "emo_" prefix since two categories share names with polarity columns.

inline std::string emotion_column(Emotion e) { return "emo_" + std::string(to_string(e)); }

inline std::vector<std::string> scored_header() {
    std::vector<std::string> h = {"id", "date", "city", "negative", "neutral", "positive", "compound"};
    for (Emotion e : kEmotions) h.push_back(emotion_column(e));
    for (const char* c : {"like_count", "reply_count", "retweet_count", "text"}) h.emplace_back(c);
    return h;
}

inline void write_scored_csv(std::ostream& os, std::span<const ScoredPost> posts) {
    csv::write_row(os, scored_header());
    for (const auto& p : posts) {
        std::vector<std::string> row = {p.id,
                                        p.date.iso(),
                                        p.city,
                                        csv::number(p.sentiment.negative),
                                        csv::number(p.sentiment.neutral),
                                        csv::number(p.sentiment.positive),
                                        csv::number(p.sentiment.compound)};
        for (double f : p.emotions) row.push_back(csv::number(f));
        row.push_back(std::to_string(p.like_count));
        row.push_back(std::to_string(p.reply_count));
        row.push_back(std::to_string(p.retweet_count));
        row.push_back(p.text);
        csv::write_row(os, row);
    }
}

/// Reads scored CSV. Engagement and text columns are optional.
inline std::vector<ScoredPost> read_scored_csv(std::istream& in, const std::string& source) {
    csv::Reader reader(in, source);
    auto header = reader.next();
    if (!header) return {};
    auto col = [&](std::string_view name) { return csv::column(*header, name, reader); };
    auto opt_col = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header->size(); ++i)
            if ((*header)[i] == name) return i;
        return std::nullopt;
    };
    const auto c_id = col("id"), c_date = col("date"), c_city = col("city"), c_neg = col("negative"),
               c_neu = col("neutral"), c_pos = col("positive"), c_cmp = col("compound");
    std::array<std::size_t, kEmotionCount> c_emo{};
    for (std::size_t i = 0; i < kEmotionCount; ++i) c_emo[i] = col(emotion_column(kEmotions[i]));
    const auto c_like = opt_col("like_count"), c_reply = opt_col("reply_count"), c_rt = opt_col("retweet_count"),
               c_text = opt_col("text");
    std::vector<ScoredPost> out;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() < header->size()) throw ParseError(source, reader.line(), "short row");
        const auto& r = *row;
        auto num = [&](std::size_t c) {
            try {
                std::size_t used = 0;
                double v = std::stod(r[c], &used);
                if (used != r[c].size()) throw std::invalid_argument("trailing");
                return v;
            } catch (const std::exception&) {
                throw ParseError(source, reader.line(), "non-numeric field '" + r[c] + "'");
            }
        };
        auto count = [&](std::optional<std::size_t> c) -> std::int64_t {
            if (!c) return 0;
            try {
                return std::stoll(r[*c]);
            } catch (const std::exception&) {
                throw ParseError(source, reader.line(), "non-integer count '" + r[*c] + "'");
            }
        };
        ScoredPost p;
        p.id = r[c_id];
        auto d = Date::try_parse(r[c_date]);
        if (!d) throw ParseError(source, reader.line(), "invalid date '" + r[c_date] + "'");
        p.date = *d;
        p.city = r[c_city];
        p.sentiment = {num(c_neg), num(c_neu), num(c_pos), num(c_cmp)};
        for (std::size_t i = 0; i < kEmotionCount; ++i) p.emotions[i] = num(c_emo[i]);
        p.like_count = count(c_like);
        p.reply_count = count(c_reply);
        p.retweet_count = count(c_rt);
        if (c_text) p.text = r[*c_text];
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace sentiscope
