#pragma once

// Daily per-city series, keyword subsets, period summaries and heatmaps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentiscope/csv.hpp"
#include "sentiscope/date.hpp"
#include "sentiscope/error.hpp"
#include "sentiscope/lexicon.hpp"
#include "sentiscope/sentiment.hpp"

namespace sentiscope {

struct ScoredPost {
    std::string id;
    Date date;
    std::string city;
    SentimentScore sentiment;
    std::array<double, kEmotionCount> emotions{};
    std::int64_t like_count = 0;
    std::int64_t reply_count = 0;
    std::int64_t retweet_count = 0;
    /// Cleaned text, kept for keyword subsetting.
    std::string text;
};

enum class Feature { compound_mean, tweet_count, like_total, reply_total, retweet_total, cases };

inline constexpr std::array<Feature, 6> kFeatures = {Feature::compound_mean, Feature::tweet_count,
                                                     Feature::like_total,    Feature::reply_total,
                                                     Feature::retweet_total, Feature::cases};

inline constexpr std::string_view to_string(Feature f) {
    switch (f) {
        case Feature::compound_mean: return "compound_mean";
        case Feature::tweet_count: return "tweet_count";
        case Feature::like_total: return "like_total";
        case Feature::reply_total: return "reply_total";
        case Feature::retweet_total: return "retweet_total";
        case Feature::cases: return "cases";
    }
    return "?";
}

inline Feature parse_feature(std::string_view name) {
    for (Feature f : kFeatures)
        if (to_string(f) == name) return f;
    throw Error("unknown feature '" + std::string(name) + "'");
}

/// Gap-free daily series of one feature for one locale. The feature is kept as
/// a name so synthetic and external series share the format.
struct CitySeries {
    std::string city;
    std::string feature;
    Date start;
    std::vector<double> values;
    /// True where the value was imputed for a day without observations.
    std::vector<bool> filled;

    std::size_t size() const { return values.size(); }
    Date date_at(std::size_t i) const { return start + static_cast<long>(i); }
    Date end() const { return start + static_cast<long>(values.size()) - 1; }
    DateRange range() const { return {start, end()}; }

    friend bool operator==(const CitySeries&, const CitySeries&) = default;
};

/// Daily aggregate of one feature. Count features are daily sums (0 on empty
/// days); compound_mean is the mean compound of the day's posts, carried
/// forward over empty days (leading empty days take the first observed mean),
/// with `filled` set. Without `range`, spans the city's first to last post.
inline CitySeries aggregate_daily(std::span<const ScoredPost> posts, std::string_view city, Feature feature,
                                  std::optional<DateRange> range = std::nullopt) {
    if (feature == Feature::cases) throw Error("case counts come from a case table, not from posts");
    std::vector<const ScoredPost*> mine;
    for (const auto& p : posts)
        if (p.city == city) mine.push_back(&p);
    if (mine.empty()) throw Error("unknown city '" + std::string(city) + "'");
    if (!range) {
        auto [lo, hi] = std::minmax_element(mine.begin(), mine.end(),
                                            [](const ScoredPost* a, const ScoredPost* b) { return a->date < b->date; });
        range = DateRange{(*lo)->date, (*hi)->date};
    }
    if (range->to < range->from) throw Error("empty date range");
    const auto n = static_cast<std::size_t>(range->length());
    std::vector<double> sum(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (const ScoredPost* p : mine) {
        if (!range->contains(p->date)) continue;
        const auto i = static_cast<std::size_t>(p->date - range->from);
        ++count[i];
        switch (feature) {
            case Feature::compound_mean: sum[i] += p->sentiment.compound; break;
            case Feature::tweet_count: sum[i] += 1.0; break;
            case Feature::like_total: sum[i] += static_cast<double>(p->like_count); break;
            case Feature::reply_total: sum[i] += static_cast<double>(p->reply_count); break;
            case Feature::retweet_total: sum[i] += static_cast<double>(p->retweet_count); break;
            case Feature::cases: break;
        }
    }
    CitySeries s{std::string(city), std::string(to_string(feature)), range->from, std::move(sum),
                 std::vector<bool>(n, false)};
    auto first = std::find_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; });
    if (first == count.end())
        throw Error("empty range: no posts for '" + std::string(city) + "' between " + range->from.iso() + " and " +
                    range->to.iso());
    if (feature == Feature::compound_mean) {
        const auto i0 = static_cast<std::size_t>(first - count.begin());
        double last = s.values[i0] / static_cast<double>(count[i0]);
        for (std::size_t i = 0; i < n; ++i) {
            if (count[i] > 0) {
                last = s.values[i] / static_cast<double>(count[i]);
                s.values[i] = last;
            } else {
                s.values[i] = last;
                s.filled[i] = true;
            }
        }
    }
    return s;
}

inline std::vector<std::string> cities_of(std::span<const ScoredPost> posts) {
    std::set<std::string> seen;
    for (const auto& p : posts) seen.insert(p.city);
    return {seen.begin(), seen.end()};
}

/// Case-insensitive literal substring match on the cleaned text.
inline std::vector<ScoredPost> keyword_filter(std::span<const ScoredPost> posts, std::string_view keyword) {
    if (keyword.empty()) throw Error("keyword must be nonempty");
    const std::string needle = fold_case(keyword);
    std::vector<ScoredPost> out;
    for (const auto& p : posts)
        if (fold_case(p.text).find(needle) != std::string::npos) out.push_back(p);
    return out;
}

struct Period {
    std::string label;
    Date start;
    Date end;
    /// Cities the period applies to; empty means every city.
    std::vector<std::string> cities;

    bool applies_to(std::string_view city) const {
        return cities.empty() || std::find(cities.begin(), cities.end(), city) != cities.end();
    }
};

/// Ordered, non-overlapping periods (per city) used for stratified summaries.
///
/// Text format, one `[period]` section per period:
///
///     [period]
///     label = Period 1
///     start = 2020-02-24
///     end = 2020-03-16
///     cities = Toronto, Montreal     # optional, default: all cities
struct PeriodConfig {
    std::vector<Period> periods;

    void validate() const {
        for (std::size_t i = 0; i < periods.size(); ++i) {
            const auto& p = periods[i];
            if (p.label.empty()) throw Error("period " + std::to_string(i + 1) + " has no label");
            if (p.end < p.start) throw Error("period '" + p.label + "' ends before it starts");
            for (std::size_t j = 0; j < i; ++j) {
                const auto& q = periods[j];
                bool shared = p.cities.empty() || q.cities.empty() ||
                              std::any_of(p.cities.begin(), p.cities.end(), [&](auto& c) { return q.applies_to(c); });
                if (!shared) continue;
                if (p.start <= q.end && q.start <= p.end)
                    throw Error("periods '" + q.label + "' and '" + p.label + "' overlap");
                if (p.start < q.start) throw Error("period '" + p.label + "' is listed out of order");
            }
        }
    }

    static PeriodConfig parse(std::string_view text, const std::string& source) {
        PeriodConfig cfg;
        std::optional<Period> cur;
        std::set<std::string> seen;
        std::size_t section_line = 0;
        auto flush = [&]() {
            if (!cur) return;
            for (const char* key : {"label", "start", "end"})
                if (!seen.contains(key))
                    throw ParseError(source, section_line, std::string("period section missing '") + key + "'");
            cfg.periods.push_back(std::move(*cur));
            cur.reset();
            seen.clear();
        };
        detail::for_each_line(text, [&](std::size_t lineno, std::string_view raw) {
            auto line = raw.substr(0, raw.find('#'));
            line = detail::trim(line);
            if (line.empty()) return;
            if (line == "[period]") {
                flush();
                cur.emplace();
                section_line = lineno;
                return;
            }
            auto eq = line.find('=');
            if (!cur || eq == std::string_view::npos)
                throw ParseError(source, lineno, "expected '[period]' or key = value inside a section");
            std::string key(detail::trim(line.substr(0, eq)));
            auto value = detail::trim(line.substr(eq + 1));
            auto date = [&]() {
                auto d = Date::try_parse(value);
                if (!d) throw ParseError(source, lineno, "invalid date '" + std::string(value) + "'");
                return *d;
            };
            if (key == "label") cur->label = std::string(value);
            else if (key == "start") cur->start = date();
            else if (key == "end") cur->end = date();
            else if (key == "cities") {
                std::size_t pos = 0;
                while (pos <= value.size()) {
                    auto comma = value.find(',', pos);
                    auto item = detail::trim(value.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
                    if (!item.empty()) cur->cities.emplace_back(item);
                    if (comma == std::string_view::npos) break;
                    pos = comma + 1;
                }
            } else {
                throw ParseError(source, lineno, "unknown key '" + key + "'");
            }
            seen.insert(key);
        });
        flush();
        cfg.validate();
        return cfg;
    }
};

struct PeriodSummary {
    std::string city;
    std::string period;
    std::size_t n_tweets = 0;
    double mean = 0.0;
    /// Sample standard deviation; absent below two posts.
    std::optional<double> sd;
};

inline constexpr std::string_view kRemainderPeriod = "remainder";

/// Count, mean and sample sd of post compounds per (city, period). Posts in no
/// period land in a trailing "remainder" row per city.
inline std::vector<PeriodSummary> period_summary(std::span<const ScoredPost> posts, const PeriodConfig& cfg) {
    cfg.validate();
    std::vector<PeriodSummary> out;
    for (const auto& city : cities_of(posts)) {
        std::vector<std::vector<double>> buckets(cfg.periods.size() + 1);
        for (const auto& p : posts) {
            if (p.city != city) continue;
            std::size_t slot = cfg.periods.size();
            for (std::size_t k = 0; k < cfg.periods.size(); ++k) {
                const auto& per = cfg.periods[k];
                if (per.applies_to(city) && per.start <= p.date && p.date <= per.end) {
                    slot = k;
                    break;
                }
            }
            buckets[slot].push_back(p.sentiment.compound);
        }
        for (std::size_t k = 0; k <= cfg.periods.size(); ++k) {
            if (k < cfg.periods.size() && !cfg.periods[k].applies_to(city)) continue;
            const auto& v = buckets[k];
            PeriodSummary s;
            s.city = city;
            s.period = k < cfg.periods.size() ? cfg.periods[k].label : std::string(kRemainderPeriod);
            s.n_tweets = v.size();
            if (!v.empty()) {
                double sum = 0;
                for (double x : v) sum += x;
                s.mean = sum / static_cast<double>(v.size());
            }
            if (v.size() >= 2) {
                double ss = 0;
                for (double x : v) ss += (x - s.mean) * (x - s.mean);
                s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

struct HeatmapMatrix {
    std::string feature;
    Date start;
    std::size_t n_dates = 0;
    std::vector<std::string> rows;
    /// Row-major, rows.size() x n_dates.
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * n_dates + c]; }
};

inline HeatmapMatrix heatmap_matrix(std::span<const CitySeries> series) {
    if (series.empty()) throw Error("heatmap needs at least one series");
    HeatmapMatrix m;
    m.feature = series.front().feature;
    m.start = series.front().start;
    m.n_dates = series.front().size();
    for (const auto& s : series) {
        if (s.feature != m.feature || s.start != m.start || s.size() != m.n_dates)
            throw Error("mismatched ranges: series '" + s.city + "/" + s.feature + "' does not share feature and dates");
        m.rows.push_back(s.city);
        m.values.insert(m.values.end(), s.values.begin(), s.values.end());
    }
    return m;
}

inline void write_heatmap_csv(std::ostream& os, const HeatmapMatrix& m) {
    std::vector<std::string> header{"city"};
    for (std::size_t c = 0; c < m.n_dates; ++c) header.push_back((m.start + static_cast<long>(c)).iso());
    csv::write_row(os, header);
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        std::vector<std::string> row{m.rows[r]};
        for (std::size_t c = 0; c < m.n_dates; ++c) row.push_back(csv::number(m.at(r, c)));
        csv::write_row(os, row);
    }
}

namespace detail {

struct Rgb {
    double r, g, b;
};

inline std::string hex(Rgb c) {
    auto ch = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 255.0))); };
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", ch(c.r), ch(c.g), ch(c.b));
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace detail

inline constexpr std::string_view kHeatmapMidColor = "#f7f7f7";

/// Diverging colour for `v` on a scale symmetric about zero: green for
/// negative, orange for positive, `kHeatmapMidColor` at zero.
inline std::string diverging_color(double v, double max_abs) {
    const detail::Rgb mid{247, 247, 247}, pos{230, 97, 1}, neg{27, 120, 55};
    if (!(max_abs > 0) || v == 0 || !std::isfinite(v)) return std::string(kHeatmapMidColor);
    const double t = std::clamp(std::abs(v) / max_abs, 0.0, 1.0);
    const detail::Rgb& end = v > 0 ? pos : neg;
    return detail::hex({mid.r + t * (end.r - mid.r), mid.g + t * (end.g - mid.g), mid.b + t * (end.b - mid.b)});
}

inline void write_heatmap_svg(std::ostream& os, const HeatmapMatrix& m, int cell_w = 6, int cell_h = 24) {
    double max_abs = 0;
    for (double v : m.values)
        if (std::isfinite(v)) max_abs = std::max(max_abs, std::abs(v));
    const int label_w = 120, top = 30;
    const int width = label_w + static_cast<int>(m.n_dates) * cell_w + 10;
    const int height = top + static_cast<int>(m.rows.size()) * cell_h + 30;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<text x=\"" << label_w << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"12\">"
       << detail::xml_escape(m.feature) << " (" << m.start.iso() << " .. "
       << (m.start + static_cast<long>(m.n_dates) - 1).iso() << ", |max| " << csv::number(max_abs) << ")</text>\n";
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        const int y = top + static_cast<int>(r) * cell_h;
        os << "<text x=\"4\" y=\"" << y + cell_h * 2 / 3 << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << detail::xml_escape(m.rows[r]) << "</text>\n";
        for (std::size_t c = 0; c < m.n_dates; ++c) {
            os << "<rect x=\"" << label_w + static_cast<int>(c) * cell_w << "\" y=\"" << y << "\" width=\"" << cell_w
               << "\" height=\"" << cell_h << "\" fill=\"" << diverging_color(m.at(r, c), max_abs) << "\"/>\n";
        }
    }
    os << "</svg>\n";
}

// Series CSV: date,city,feature,value,filled

inline void write_series_csv(std::ostream& os, std::span<const CitySeries> series) {
    os << "date,city,feature,value,filled\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.size(); ++i)
            csv::write_row(os, std::array<std::string, 5>{s.date_at(i).iso(), s.city, s.feature,
                                                          csv::number(s.values[i]), s.filled[i] ? "1" : "0"});
}

/// Reads a series CSV (the `filled` column is optional). Rows are grouped by
/// (city, feature); each group must form a contiguous run of days.
inline std::vector<CitySeries> read_series_csv(std::istream& in, const std::string& source) {
    csv::Reader reader(in, source);
    auto header = reader.next();
    if (!header) return {};
    const auto c_date = csv::column(*header, "date", reader), c_city = csv::column(*header, "city", reader),
               c_feat = csv::column(*header, "feature", reader), c_val = csv::column(*header, "value", reader);
    std::optional<std::size_t> c_fill;
    for (std::size_t i = 0; i < header->size(); ++i)
        if ((*header)[i] == "filled") c_fill = i;
    std::map<std::pair<std::string, std::string>, std::map<Date, std::pair<double, bool>>> groups;
    std::vector<std::pair<std::string, std::string>> order;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() < header->size()) throw ParseError(source, reader.line(), "short row");
        auto date = Date::try_parse((*row)[c_date]);
        if (!date) throw ParseError(source, reader.line(), "invalid date '" + (*row)[c_date] + "'");
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod((*row)[c_val], &used);
            if (used != (*row)[c_val].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError(source, reader.line(), "non-numeric value '" + (*row)[c_val] + "'");
        }
        auto key = std::make_pair((*row)[c_city], (*row)[c_feat]);
        if (!groups.contains(key)) order.push_back(key);
        auto& g = groups[key];
        if (g.contains(*date)) throw ParseError(source, reader.line(), "duplicate date " + date->iso());
        g[*date] = {v, c_fill && (*row)[*c_fill] == "1"};
    }
    std::vector<CitySeries> out;
    for (const auto& key : order) {
        const auto& g = groups[key];
        CitySeries s;
        s.city = key.first;
        s.feature = key.second;
        s.start = g.begin()->first;
        for (const auto& [d, vf] : g) {
            if (d - s.start != static_cast<long>(s.values.size()))
                throw Error(source + ": series " + s.city + "/" + s.feature + " has a gap before " + d.iso());
            s.values.push_back(vf.first);
            s.filled.push_back(vf.second);
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Case table "date,city,cases" -> one "cases" series per city over `range`
/// (or the city's own span). Missing days count as 0 and are flagged.
inline std::vector<CitySeries> read_cases_csv(std::istream& in, const std::string& source,
                                              std::optional<DateRange> range = std::nullopt) {
    csv::Reader reader(in, source);
    auto header = reader.next();
    if (!header) return {};
    const auto c_date = csv::column(*header, "date", reader), c_city = csv::column(*header, "city", reader),
               c_cases = csv::column(*header, "cases", reader);
    std::map<std::string, std::map<Date, double>> by_city;
    while (auto row = reader.next()) {
        if (row->size() == 1 && row->front().empty()) continue;
        if (row->size() < header->size()) throw ParseError(source, reader.line(), "short row");
        auto date = Date::try_parse((*row)[c_date]);
        if (!date) throw ParseError(source, reader.line(), "invalid date '" + (*row)[c_date] + "'");
        double v;
        try {
            v = std::stod((*row)[c_cases]);
        } catch (const std::exception&) {
            throw ParseError(source, reader.line(), "non-numeric cases '" + (*row)[c_cases] + "'");
        }
        if (v < 0) throw ParseError(source, reader.line(), "negative case count");
        by_city[(*row)[c_city]][*date] += v;
    }
    std::vector<CitySeries> out;
    for (const auto& [city, days] : by_city) {
        DateRange r = range.value_or(DateRange{days.begin()->first, days.rbegin()->first});
        CitySeries s{city, std::string(to_string(Feature::cases)), r.from, {}, {}};
        for (Date d = r.from; d <= r.to; d = d + 1) {
            auto it = days.find(d);
            s.values.push_back(it == days.end() ? 0.0 : it->second);
            s.filled.push_back(it == days.end());
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sentiscope
